"""Physical constants, equation of state and scaling of heat-coupled scenarios.

Scaling used by :func:`nondimensionalize` (primes mark dimensionless values)::

    x = L x'          t = (L**2/mu) t'      u = (mu/L) u'
    T = theta T'      F = (mu**2/L**3) F'   Q = (mu*theta/L**2) Q'

which leaves the momentum equation with unit viscosity and thermal group
``K = L**2 * beta * theta / mu**2``; the heat equation carries ``kappa/mu``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .fields import (
    ScalarExpr,
    VectorFieldSpec,
    X1,
    X2,
    ZERO,
    const,
    eval_scalar,
    grad,
    directional,
    div_field,
    parse_expr,
    substitute,
)


class ConfigError(ValueError):
    """Raised for malformed or incomplete scenario configuration files."""


@dataclass(frozen=True)
class FluidKind:
    """Equation-of-state coefficients: ``p = rho * (beta*T + delta)``.

    A gas carries its specific gas constant ``R`` (beta = R, delta = 0); a
    liquid carries ``sigma`` and ``gamma`` (beta = sigma, delta = gamma).
    """

    tag: str
    beta: float
    delta: float = 0.0

    @classmethod
    def gas(cls, R: float) -> "FluidKind":
        return cls("gas", float(R), 0.0)

    @classmethod
    def liquid(cls, sigma: float, gamma: float) -> "FluidKind":
        return cls("liquid", float(sigma), float(gamma))

    def __post_init__(self):
        if self.tag not in ("gas", "liquid"):
            raise ValueError(f"unknown fluid kind {self.tag!r}")
        if self.tag == "gas" and self.delta != 0.0:
            raise ValueError("a gas has no additive pressure term")


def pressure_from_state(rho: float, T: float, kind: FluidKind) -> float:
    if not rho > 0:
        raise ValueError(f"density must be positive, got {rho}")
    if kind.tag == "gas" and not T > 0:
        raise ValueError(f"gas temperature must be positive, got {T}")
    return rho * (kind.beta * T + kind.delta)


def pressure_gradient_decomposition(T: ScalarExpr, phi: ScalarExpr, beta: float, delta: float) -> VectorFieldSpec:
    """-grad(p)/rho written in log-density form, phi = ln(rho)."""
    gphi, gT = grad(phi), grad(T)
    b, d = const(beta), const(delta)
    c1 = -(b * T * gphi.c1) - b * gT.c1 - d * gphi.c1
    c2 = -(b * T * gphi.c2) - b * gT.c2 - d * gphi.c2
    return VectorFieldSpec(c1, c2)


def phi_transport_residual(u: VectorFieldSpec, phi: ScalarExpr, phi_t: ScalarExpr) -> ScalarExpr:
    """Mass conservation residual ``phi_t + (u.grad) phi + div u``."""
    return phi_t + directional(u, phi) + div_field(u)


@dataclass(frozen=True)
class Window:
    xmin: float = -2.0
    xmax: float = 2.0
    ymin: float = -2.0
    ymax: float = 2.0

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"window must have positive area: {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, x1, x2):
        return (x1 >= self.xmin) & (x1 <= self.xmax) & (x2 >= self.ymin) & (x2 <= self.ymax)

    def shrink(self, frac: float) -> "Window":
        dx, dy = frac * self.width, frac * self.height
        return Window(self.xmin + dx, self.xmax - dx, self.ymin + dy, self.ymax - dy)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)


@dataclass(frozen=True)
class Constants:
    mu: float = 1.0
    kappa: float = 1.0
    beta: float = 1.0
    delta: float = 0.0
    L: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        for name in ("mu", "L", "theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def K(self) -> float:
        return self.L**2 * self.beta * self.theta / self.mu**2

    @property
    def time_scale(self) -> float:
        return self.L**2 / self.mu


@dataclass(frozen=True)
class Scenario:
    """Dimensional initial data and constants of a heat-coupled flow."""

    psi: VectorFieldSpec
    T0: ScalarExpr
    F0: VectorFieldSpec = field(default_factory=lambda: VectorFieldSpec(ZERO, ZERO))
    Q: ScalarExpr = ZERO
    constants: Constants = field(default_factory=Constants)
    window: Window = field(default_factory=Window)

    def fingerprint(self) -> dict:
        c = self.constants
        return {
            "constants": {"mu": c.mu, "kappa": c.kappa, "beta": c.beta, "delta": c.delta, "L": c.L, "theta": c.theta},
            "fields": {
                "psi1": self.psi.c1.to_text(),
                "psi2": self.psi.c2.to_text(),
                "T0": self.T0.to_text(),
                "F1": self.F0.c1.to_text(),
                "F2": self.F0.c2.to_text(),
                "Q": self.Q.to_text(),
            },
            "window": dict(zip(("xmin", "xmax", "ymin", "ymax"), self.window.as_tuple())),
        }

    def hash(self) -> str:
        blob = json.dumps(self.fingerprint(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class DimensionlessScenario:
    psi: VectorFieldSpec
    T0: ScalarExpr
    F0: VectorFieldSpec
    Q: ScalarExpr
    K: float
    invPr: float
    window: Window = field(default_factory=Window)
    # the dimensional constants this was scaled from; None for scenarios built directly
    scales: Constants | None = None

    def __post_init__(self):
        if not (math.isfinite(self.K) and math.isfinite(self.invPr)):
            raise ValueError("K and invPr must be finite")

    @classmethod
    def build(cls, psi, T0, F0=None, Q=None, K=1.0, invPr=1.0, window=None) -> "DimensionlessScenario":
        return cls(
            psi=psi,
            T0=T0,
            F0=F0 if F0 is not None else VectorFieldSpec(ZERO, ZERO),
            Q=Q if Q is not None else ZERO,
            K=float(K),
            invPr=float(invPr),
            window=window or Window(),
        )

    def with_window(self, window: Window) -> "DimensionlessScenario":
        return replace(self, window=window)


def _rescale(e: ScalarExpr, factor: float, L: float) -> ScalarExpr:
    return const(factor) * substitute(e, {"x1": const(L) * X1, "x2": const(L) * X2})


def nondimensionalize(s: Scenario) -> DimensionlessScenario:
    c = s.constants
    mu, L, th = c.mu, c.L, c.theta
    vel = L / mu
    force = L**3 / mu**2
    heat = L**2 / (mu * th)
    return DimensionlessScenario(
        psi=VectorFieldSpec(_rescale(s.psi.c1, vel, L), _rescale(s.psi.c2, vel, L)),
        T0=_rescale(s.T0, 1.0 / th, L),
        F0=VectorFieldSpec(_rescale(s.F0.c1, force, L), _rescale(s.F0.c2, force, L)),
        Q=_rescale(s.Q, heat, L),
        K=c.K,
        invPr=c.kappa / mu,
        window=s.window,
        scales=c,
    )


def redimensionalize(ds: DimensionlessScenario, constants: Constants | None = None) -> Scenario:
    """Inverse of :func:`nondimensionalize`."""
    c = constants or ds.scales
    if c is None:
        raise ValueError("no dimensional scales attached to this scenario")
    mu, L, th = c.mu, c.L, c.theta
    inv = 1.0 / L
    return Scenario(
        psi=VectorFieldSpec(_rescale(ds.psi.c1, mu / L, inv), _rescale(ds.psi.c2, mu / L, inv)),
        T0=_rescale(ds.T0, th, inv),
        F0=VectorFieldSpec(_rescale(ds.F0.c1, mu**2 / L**3, inv), _rescale(ds.F0.c2, mu**2 / L**3, inv)),
        Q=_rescale(ds.Q, mu * th / L**2, inv),
        constants=c,
        window=ds.window,
    )


def dimensionalize(event, s: Scenario | Constants) -> tuple[float, tuple[float, float]]:
    """Physical time and position of a separation event.

    ``event`` needs ``t0`` and ``x_bar``; ``s`` supplies ``L`` and ``mu``.
    """
    c = s.constants if isinstance(s, Scenario) else s
    t0 = event.t0
    if t0 is None or not math.isfinite(t0):
        raise ValueError("event has no finite separation time")
    x = event.x_bar
    return c.time_scale * t0, (c.L * x[0], c.L * x[1])


# Config files

_SECTIONS = {
    "constants": ("mu", "kappa", "beta", "delta", "L", "theta"),
    "fields": ("psi1", "psi2", "T0", "F1", "F2", "Q"),
    "window": ("xmin", "xmax", "ymin", "ymax"),
}
_REQUIRED = {
    "constants": ("mu", "beta", "L", "theta"),
    "fields": ("psi1", "psi2", "T0"),
    "window": (),
}


def _read_parser(text: str, source: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (T0, L)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cp


def scenario_from_text(text: str, source: str = "<config>") -> Scenario:
    cp = _read_parser(text, source)
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in section [{section}]")
    for section in ("constants", "fields"):
        if section not in cp:
            raise ConfigError(f"{source}: missing section [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in cp[section]:
                raise ConfigError(f"{source}: missing key {key!r} in section [{section}]")

    def number(section, key, default):
        if section not in cp or key not in cp[section]:
            return default
        try:
            return float(cp[section][key])
        except ValueError as exc:
            raise ConfigError(f"{source}: [{section}] {key} is not a number") from exc

    def expr(key, default="0"):
        text = cp["fields"].get(key, default)
        try:
            return parse_expr(text)
        except ValueError as exc:
            raise ConfigError(f"{source}: [fields] {key}: {exc}") from exc

    try:
        constants = Constants(
            mu=number("constants", "mu", 1.0),
            kappa=number("constants", "kappa", 0.0),
            beta=number("constants", "beta", 1.0),
            delta=number("constants", "delta", 0.0),
            L=number("constants", "L", 1.0),
            theta=number("constants", "theta", 1.0),
        )
        window = Window(
            number("window", "xmin", -2.0),
            number("window", "xmax", 2.0),
            number("window", "ymin", -2.0),
            number("window", "ymax", 2.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from exc
    return Scenario(
        psi=VectorFieldSpec(expr("psi1"), expr("psi2")),
        T0=expr("T0"),
        F0=VectorFieldSpec(expr("F1"), expr("F2")),
        Q=expr("Q"),
        constants=constants,
        window=window,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return scenario_from_text(text, source=str(path))


def scenario_to_text(s: Scenario) -> str:
    fp = s.fingerprint()
    lines = []
    for section in ("constants", "fields", "window"):
        lines.append(f"[{section}]")
        for key, value in fp[section].items():
            lines.append(f"{key} = {value!r}" if not isinstance(value, str) else f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def sample_field(e: ScalarExpr, window: Window, n: int = 101):
    """Evaluate ``e`` on an n-by-n node grid covering ``window`` (indexing ij)."""
    x1 = np.linspace(window.xmin, window.xmax, n)
    x2 = np.linspace(window.ymin, window.ymax, n)
    X1g, X2g = np.meshgrid(x1, x2, indexing="ij")
    return eval_scalar(e, (X1g, X2g))
