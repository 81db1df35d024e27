"""Closed-form 2D fields over (x1, x2) with exact symbolic derivatives.

Expressions are immutable trees. Evaluation accepts floats or numpy arrays
(broadcast elementwise) and is compiled to a numpy lambda on first use.
Division by zero raises :class:`EvaluationError`; non-finite results are
never returned silently.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Union

import numpy as np

VARIABLES = ("x1", "x2")
FUNCTIONS = ("sin", "cos", "exp")

Number = Union[int, float]


class EvaluationError(ArithmeticError):
    """Raised when an expression cannot be evaluated to a finite value."""


class ParseError(ValueError):
    pass


def _div(num, den, label):
    if np.any(den == 0):
        raise EvaluationError(f"division by zero in denominator ({label})")
    return num / den


def _pow(base, n, label):
    if n < 0 and np.any(base == 0):
        raise EvaluationError(f"zero raised to negative power in ({label})")
    if n < 0:
        return 1.0 / base ** (-n)
    return base**n


_NAMESPACE = {"_div": _div, "_pow": _pow, "_sin": np.sin, "_cos": np.cos, "_exp": np.exp}


def _coerce(value) -> "ScalarExpr":
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


class ScalarExpr:
    """Base class of every expression node."""

    precedence = 100

    # arithmetic sugar; the smart constructors below do light folding
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __pow__(self, n):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return power(self, int(n))

    # subclass hooks
    def children(self) -> tuple["ScalarExpr", ...]:
        return ()

    def _code(self) -> str:
        raise NotImplementedError

    def _diff(self, var: str) -> "ScalarExpr":
        raise NotImplementedError

    def _text(self) -> str:
        raise NotImplementedError

    def _subs(self, mapping: dict[str, "ScalarExpr"]) -> "ScalarExpr":
        raise NotImplementedError

    @cached_property
    def compiled(self) -> Callable:
        src = f"lambda x1, x2: {self._code()}"
        return eval(src, dict(_NAMESPACE))  # noqa: S307 - generated from our own tree

    def __call__(self, x1, x2):
        return eval_scalar(self, (x1, x2))

    def walk(self) -> Iterator["ScalarExpr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def is_constant(self) -> bool:
        return not any(isinstance(n, Var) for n in self.walk())

    def to_text(self) -> str:
        return self._text()

    def __str__(self) -> str:
        return self._text()

    def _wrap(self, child: "ScalarExpr", strict: bool = False) -> str:
        text = child._text()
        if child.precedence < self.precedence or (strict and child.precedence == self.precedence):
            return f"({text})"
        return text


@dataclass(frozen=True, eq=True)
class Const(ScalarExpr):
    value: float

    def _code(self):
        return f"({self.value!r})"

    def _diff(self, var):
        return ZERO

    def _text(self):
        v = self.value
        if v.is_integer() and abs(v) < 1e15:
            s = str(int(v))
        else:
            s = repr(v)
        return f"({s})" if v < 0 else s

    def _subs(self, mapping):
        return self


@dataclass(frozen=True, eq=True)
class Var(ScalarExpr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")

    def _code(self):
        return self.name

    def _diff(self, var):
        return ONE if var == self.name else ZERO

    def _text(self):
        return self.name

    def _subs(self, mapping):
        return mapping.get(self.name, self)


@dataclass(frozen=True, eq=True)
class Add(ScalarExpr):
    a: ScalarExpr
    b: ScalarExpr
    precedence = 1

    def children(self):
        return (self.a, self.b)

    def _code(self):
        return f"({self.a._code()} + {self.b._code()})"

    def _diff(self, var):
        return add(self.a._diff(var), self.b._diff(var))

    def _text(self):
        return f"{self._wrap(self.a)} + {self._wrap(self.b)}"

    def _subs(self, mapping):
        return add(self.a._subs(mapping), self.b._subs(mapping))


@dataclass(frozen=True, eq=True)
class Sub(ScalarExpr):
    a: ScalarExpr
    b: ScalarExpr
    precedence = 1

    def children(self):
        return (self.a, self.b)

    def _code(self):
        return f"({self.a._code()} - {self.b._code()})"

    def _diff(self, var):
        return sub(self.a._diff(var), self.b._diff(var))

    def _text(self):
        return f"{self._wrap(self.a)} - {self._wrap(self.b, strict=True)}"

    def _subs(self, mapping):
        return sub(self.a._subs(mapping), self.b._subs(mapping))


@dataclass(frozen=True, eq=True)
class Mul(ScalarExpr):
    a: ScalarExpr
    b: ScalarExpr
    precedence = 2

    def children(self):
        return (self.a, self.b)

    def _code(self):
        return f"({self.a._code()} * {self.b._code()})"

    def _diff(self, var):
        return add(mul(self.a._diff(var), self.b), mul(self.a, self.b._diff(var)))

    def _text(self):
        return f"{self._wrap(self.a)}*{self._wrap(self.b, strict=True)}"

    def _subs(self, mapping):
        return mul(self.a._subs(mapping), self.b._subs(mapping))


@dataclass(frozen=True, eq=True)
class Div(ScalarExpr):
    a: ScalarExpr
    b: ScalarExpr
    precedence = 2

    def children(self):
        return (self.a, self.b)

    def _code(self):
        return f"_div({self.a._code()}, {self.b._code()}, {self.b._text()!r})"

    def _diff(self, var):
        num = sub(mul(self.a._diff(var), self.b), mul(self.a, self.b._diff(var)))
        return div(num, power(self.b, 2))

    def _text(self):
        return f"{self._wrap(self.a)}/{self._wrap(self.b, strict=True)}"

    def _subs(self, mapping):
        return div(self.a._subs(mapping), self.b._subs(mapping))


@dataclass(frozen=True, eq=True)
class Pow(ScalarExpr):
    base: ScalarExpr
    n: int
    precedence = 3

    def children(self):
        return (self.base,)

    def _code(self):
        if self.n >= 0:
            return f"({self.base._code()} ** {self.n})"
        return f"_pow({self.base._code()}, {self.n}, {self.base._text()!r})"

    def _diff(self, var):
        return mul(mul(Const(float(self.n)), power(self.base, self.n - 1)), self.base._diff(var))

    def _text(self):
        exp = str(self.n) if self.n >= 0 else f"({self.n})"
        return f"{self._wrap(self.base, strict=True)}^{exp}"

    def _subs(self, mapping):
        return power(self.base._subs(mapping), self.n)


@dataclass(frozen=True, eq=True)
class Func(ScalarExpr):
    name: str
    arg: ScalarExpr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)

    def _code(self):
        return f"_{self.name}({self.arg._code()})"

    def _diff(self, var):
        inner = self.arg._diff(var)
        if self.name == "sin":
            outer = Func("cos", self.arg)
        elif self.name == "cos":
            outer = mul(Const(-1.0), Func("sin", self.arg))
        else:
            outer = self
        return mul(outer, inner)

    def _text(self):
        return f"{self.name}({self.arg._text()})"

    def _subs(self, mapping):
        return Func(self.name, self.arg._subs(mapping))


ZERO = Const(0.0)
ONE = Const(1.0)
X1 = Var("x1")
X2 = Var("x2")


def _is(e: ScalarExpr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


# Smart constructors: identity elimination and constant folding only.
def add(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Add(a, b)


def sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return mul(Const(-1.0), b)
    return Sub(a, b)


def mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.a, Const):
        return mul(Const(a.value * b.a.value), b.b)
    return Mul(a, b)


def div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    # a zero denominator is kept so evaluation reports it
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and isinstance(b, Const) and b.value != 0.0:
        return ZERO
    return Div(a, b)


def power(base: ScalarExpr, n: int) -> ScalarExpr:
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const) and (base.value != 0.0 or n > 0):
        return Const(base.value**n)
    return Pow(base, n)


def const(value: Number) -> Const:
    return Const(float(value))


def sin(e) -> ScalarExpr:
    return Func("sin", _coerce(e))


def cos(e) -> ScalarExpr:
    return Func("cos", _coerce(e))


def exp(e) -> ScalarExpr:
    return Func("exp", _coerce(e))


def eval_scalar(e: ScalarExpr, x) -> float | np.ndarray:
    """Evaluate ``e`` at ``x = (x1, x2)``; arrays broadcast elementwise."""
    x1, x2 = x
    with np.errstate(all="ignore"):
        value = e.compiled(x1, x2)
    if np.ndim(value) == 0:
        value = float(value)
        if not math.isfinite(value):
            raise EvaluationError(f"non-finite value of ({e.to_text()}) at {x}")
        return value
    value = np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(x1, x2).shape)
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"non-finite value of ({e.to_text()})")
    return value


def partial(e: ScalarExpr, var: str) -> ScalarExpr:
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return e._diff(var)


def substitute(e: ScalarExpr, mapping: dict[str, ScalarExpr]) -> ScalarExpr:
    return e._subs({k: _coerce(v) for k, v in mapping.items()})


@dataclass(frozen=True)
class VectorFieldSpec:
    c1: ScalarExpr
    c2: ScalarExpr

    def __post_init__(self):
        object.__setattr__(self, "c1", _coerce(self.c1))
        object.__setattr__(self, "c2", _coerce(self.c2))

    def __iter__(self):
        return iter((self.c1, self.c2))

    def __call__(self, x1, x2):
        return eval_vector(self, (x1, x2))

    def __add__(self, other: "VectorFieldSpec"):
        return VectorFieldSpec(self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: "VectorFieldSpec"):
        return VectorFieldSpec(self.c1 - other.c1, self.c2 - other.c2)

    def scale(self, k) -> "VectorFieldSpec":
        return VectorFieldSpec(_coerce(k) * self.c1, _coerce(k) * self.c2)

    def dot(self, other: "VectorFieldSpec") -> ScalarExpr:
        return self.c1 * other.c1 + self.c2 * other.c2

    def substitute(self, mapping) -> "VectorFieldSpec":
        return VectorFieldSpec(substitute(self.c1, mapping), substitute(self.c2, mapping))

    def to_text(self) -> tuple[str, str]:
        return (self.c1.to_text(), self.c2.to_text())


def eval_vector(w: VectorFieldSpec, x) -> np.ndarray:
    a, b = np.broadcast_arrays(eval_scalar(w.c1, x), eval_scalar(w.c2, x), np.asarray(x[0], dtype=float))[:2]
    return np.stack([a, b])


# Differential operators


def grad(e: ScalarExpr) -> VectorFieldSpec:
    return VectorFieldSpec(partial(e, "x1"), partial(e, "x2"))


def div_field(w: VectorFieldSpec) -> ScalarExpr:
    return add(partial(w.c1, "x1"), partial(w.c2, "x2"))


def laplacian(e: ScalarExpr) -> ScalarExpr:
    return add(partial(partial(e, "x1"), "x1"), partial(partial(e, "x2"), "x2"))


def vector_laplacian(w: VectorFieldSpec) -> VectorFieldSpec:
    return VectorFieldSpec(laplacian(w.c1), laplacian(w.c2))


def directional(a: VectorFieldSpec, e: ScalarExpr) -> ScalarExpr:
    """(a . grad) e for a scalar e."""
    return add(mul(a.c1, partial(e, "x1")), mul(a.c2, partial(e, "x2")))


def advect(a: VectorFieldSpec, b: VectorFieldSpec) -> VectorFieldSpec:
    """(a . grad) b."""
    return VectorFieldSpec(directional(a, b.c1), directional(a, b.c2))


def jacobian(w: VectorFieldSpec) -> tuple[tuple[ScalarExpr, ScalarExpr], tuple[ScalarExpr, ScalarExpr]]:
    return (
        (partial(w.c1, "x1"), partial(w.c1, "x2")),
        (partial(w.c2, "x1"), partial(w.c2, "x2")),
    )


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def from_array(cls, m) -> "Mat2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def frobenius(self) -> float:
        return math.sqrt(self.a11**2 + self.a12**2 + self.a21**2 + self.a22**2)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def matvec(self, v) -> np.ndarray:
        return self.as_array() @ np.asarray(v, dtype=float)

    def to_list(self) -> list[list[float]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]


def jacobian_at(w: VectorFieldSpec, x) -> Mat2:
    J = jacobian(w)
    return Mat2(*(eval_scalar(J[i][j], x) for i in range(2) for j in range(2)))


# Text grammar

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at position {pos} in {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or 'token'!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> ScalarExpr:
        if not self.tokens:
            raise ParseError("empty expression")
        e = self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"trailing input {self.tokens[self.i][1]!r} in {self.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Mul(Const(-1.0), self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.integer())
        return base

    def integer(self) -> int:
        if self.peek()[1] == "(":
            self.take()
            n = self.integer()
            self.take(")")
            return n
        sign = 1
        if self.peek()[1] in ("-", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        kind, value = self.take()
        if kind != "num" or not float(value).is_integer():
            raise ParseError(f"exponent must be an integer literal, got {value!r}")
        return sign * int(float(value))

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Func(value, arg)
            raise ParseError(f"unknown name {value!r} in {self.text!r}")
        if value == "(":
            e = self.expr()
            self.take(")")
            return e
        raise ParseError(f"unexpected {value!r} in {self.text!r}")


def parse_expr(text: str) -> ScalarExpr:
    """Parse infix text such as ``"1 + 2*x1^2 - sin(x2)"``."""
    return _Parser(str(text)).parse()
