"""Zeros of planar vector fields, their Poincare index and degeneracy structure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import Mat2, VectorFieldSpec, eval_scalar, jacobian
from .model import Window

ROOT_TOL = 1e-9
DET_TOL = 1e-7
MAT_TOL = 1e-10
TRANS_TOL = 1e-8
MERGE_RADIUS = 1e-5
INDEX_RADIUS = 0.1
INDEX_SAMPLES = 720
FD_STEP = 1e-6
MAX_NEWTON = 50
SEED_DENSITY = 24


class WindingError(ArithmeticError):
    """Base class for failures of the winding-number computation."""


class InconclusiveIndexError(WindingError):
    """The field vanishes on (or numerically at) the sampling circle."""


class UndersampledIndexError(WindingError):
    """Too few samples to resolve the rotation of the field along the circle."""


class DegeneracyError(ArithmeticError):
    pass


class ZeroMatrixError(DegeneracyError):
    pass


class NotRankOneError(DegeneracyError):
    pass


class PlanarField:
    """Vectorized evaluation of a 2-vector map plus its Jacobian.

    ``value(x1, x2)`` returns shape ``(2, *x1.shape)`` and ``jacobian`` returns
    ``(2, 2, *x1.shape)``. Closed-form specs use exact partials; arbitrary
    callables fall back to centered differences.
    """

    def __init__(self, value: Callable, jac: Callable | None = None, fd_step: float = FD_STEP):
        self._value = value
        self._jac = jac
        self.fd_step = fd_step

    @classmethod
    def from_spec(cls, w: VectorFieldSpec) -> "PlanarField":
        J = jacobian(w)

        def value(x1, x2):
            shape = np.shape(x1)
            return np.stack([np.broadcast_to(eval_scalar(c, (x1, x2)), shape) for c in (w.c1, w.c2)])

        def jac(x1, x2):
            shape = np.shape(x1)
            return np.stack(
                [np.stack([np.broadcast_to(eval_scalar(J[i][j], (x1, x2)), shape) for j in range(2)]) for i in range(2)]
            )

        return cls(value, jac)

    def value(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return np.asarray(self._value(x1, x2), dtype=float)

    def jacobian(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        if self._jac is not None:
            return np.asarray(self._jac(x1, x2), dtype=float)
        h = self.fd_step
        d1 = (self._value(x1 + h, x2) - self._value(x1 - h, x2)) / (2 * h)
        d2 = (self._value(x1, x2 + h) - self._value(x1, x2 - h)) / (2 * h)
        return np.stack([d1, d2], axis=1)

    def jacobian_at(self, x) -> Mat2:
        return Mat2.from_array(self.jacobian(float(x[0]), float(x[1])))


def as_field(f) -> PlanarField:
    if isinstance(f, PlanarField):
        return f
    if isinstance(f, VectorFieldSpec):
        return PlanarField.from_spec(f)
    if callable(f):
        return PlanarField(f)
    raise TypeError(f"cannot treat {type(f).__name__} as a vector field")


def _newton(field: PlanarField, x: np.ndarray, root_tol: float, max_iter: int, box: Window):
    """Damped Newton from many seeds at once. Returns (points, residual norms).

    Seeds keep iterating past ``root_tol`` while the residual still drops, so
    that roots of degenerate (slowly converging) zeros are polished before
    deduplication.
    """
    x = x.copy()
    F = field.value(x[:, 0], x[:, 1])
    r = np.hypot(F[0], F[1])
    active = np.isfinite(r) & (r > 0)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa, Fa = x[idx], F[:, idx]
        J = field.jacobian(xa[:, 0], xa[:, 1])
        a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
        # Levenberg-regularized normal equations; plain Newton when J is well conditioned
        lam = 1e-14 * (a * a + b * b + c * c + d * d) + 1e-300
        g1 = a * Fa[0] + c * Fa[1]
        g2 = b * Fa[0] + d * Fa[1]
        m11 = a * a + c * c + lam
        m12 = a * b + c * d
        m22 = b * b + d * d + lam
        det = m11 * m22 - m12 * m12
        with np.errstate(all="ignore"):
            s1 = -(m22 * g1 - m12 * g2) / det
            s2 = -(m11 * g2 - m12 * g1) / det
        step = np.stack([s1, s2], axis=1)
        step[~np.isfinite(step)] = 0.0
        ra = r[idx]
        scale = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        new_x = xa.copy()
        new_F = Fa.copy()
        new_r = ra.copy()
        for _halving in range(12):
            todo = ~accepted
            if not todo.any():
                break
            trial = xa[todo] + scale[todo, None] * step[todo]
            with np.errstate(all="ignore"):
                Ft = field.value(trial[:, 0], trial[:, 1])
            rt = np.hypot(Ft[0], Ft[1])
            ok = np.isfinite(rt) & (rt < ra[todo])
            sel = np.flatnonzero(todo)[ok]
            new_x[sel], new_F[:, sel], new_r[sel] = trial[ok], Ft[:, ok], rt[ok]
            accepted[sel] = True
            scale[todo] *= 0.5
        x[idx], F[:, idx], r[idx] = new_x, new_F, new_r
        # stalled seeds (no descent) and seeds far outside the search box are dropped
        pad_x, pad_y = box.width, box.height
        far = (
            (x[idx, 0] < box.xmin - pad_x)
            | (x[idx, 0] > box.xmax + pad_x)
            | (x[idx, 1] < box.ymin - pad_y)
            | (x[idx, 1] > box.ymax + pad_y)
        )
        active[idx[~accepted | far]] = False
        active &= r > 0
    return x, r


def _polish_degenerate(field: PlanarField, p: np.ndarray, root_tol: float, iters: int = 30) -> np.ndarray:
    """Refine a near-degenerate zero by Gauss-Newton on (v, det J / |J|).

    Floating point cannot resolve a fold zero better than about sqrt(eps)
    from v alone; adding the determinant row pins it to full precision.
    Returns ``p`` unchanged if the refinement leaves the zero set.
    """
    J0 = field.jacobian(p[0], p[1])
    scale = float(np.sqrt(np.sum(J0**2)))
    if scale <= MAT_TOL:
        return p
    h = field.fd_step

    def G(q):
        v = field.value(q[0], q[1])
        J = field.jacobian(q[0], q[1])
        return np.array([v[0], v[1], (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]) / scale])

    q = p.copy()
    g = G(q)
    for _ in range(iters):
        A = np.empty((3, 2))
        A[:2] = field.jacobian(q[0], q[1])
        A[2, 0] = (G(q + [h, 0])[2] - G(q - [h, 0])[2]) / (2 * h)
        A[2, 1] = (G(q + [0, h])[2] - G(q - [0, h])[2]) / (2 * h)
        step = np.linalg.lstsq(A, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        q_new = q + step
        g_new = G(q_new)
        if np.linalg.norm(g_new) >= np.linalg.norm(g):
            break
        q, g = q_new, g_new
        if np.linalg.norm(step) < 1e-16 * (1 + np.linalg.norm(q)):
            break
    if np.hypot(g[0], g[1]) <= root_tol and np.hypot(*(q - p)) <= 1e3 * MERGE_RADIUS:
        return q
    return p


def _merge(points: np.ndarray, residuals: np.ndarray, radius: float) -> list[tuple[float, float]]:
    order = np.argsort(residuals, kind="stable")
    kept: list[np.ndarray] = []
    for i in order:
        p = points[i]
        if all(np.hypot(*(p - q)) > radius for q in kept):
            kept.append(p)
    return sorted((float(p[0]), float(p[1])) for p in kept)


def find_singular_points(
    f,
    window: Window,
    seed_density: int = SEED_DENSITY,
    root_tol: float = ROOT_TOL,
    merge_radius: float = MERGE_RADIUS,
    max_iter: int = MAX_NEWTON,
) -> list[tuple[float, float]]:
    """Zeros of ``f`` inside ``window``, deduplicated and sorted lexicographically."""
    if seed_density < 8:
        raise ValueError("seed_density must be at least 8")
    field_ = as_field(f)
    # cell-centred seeds keep clear of symmetry lines through the window centre
    s1 = window.xmin + (np.arange(seed_density) + 0.5) * window.width / seed_density
    s2 = window.ymin + (np.arange(seed_density) + 0.5) * window.height / seed_density
    g1, g2 = np.meshgrid(s1, s2, indexing="ij")
    seeds = np.column_stack([g1.ravel(), g2.ravel()])
    x, r = _newton(field_, seeds, root_tol, max_iter, window)
    ok = (r <= root_tol) & window.contains(x[:, 0], x[:, 1])
    pts = np.array(_merge(x[ok], r[ok], merge_radius)).reshape(-1, 2)
    if pts.shape[0]:
        J = field_.jacobian(pts[:, 0], pts[:, 1])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        fro2 = np.sum(J**2, axis=(0, 1))
        for i in np.flatnonzero(np.abs(det) <= 1e-3 * fro2):
            pts[i] = _polish_degenerate(field_, pts[i], root_tol)
        pts = pts[window.contains(pts[:, 0], pts[:, 1])]
    v = field_.value(pts[:, 0], pts[:, 1])
    x, r = pts, np.hypot(v[0], v[1])
    return _merge(x, r, merge_radius)


def winding_number(f, x0, radius: float = INDEX_RADIUS, samples: int = INDEX_SAMPLES) -> tuple[int, float]:
    """Return (index, rounding residue) of ``f`` along a circle around ``x0``.

    The index is the exact sum of principal angle increments; the residue
    compares it with the chord (first-order) estimate of the same integral,
    which drifts from an integer when the circle is undersampled.
    """
    field_ = as_field(f)
    theta = 2 * np.pi * np.arange(samples + 1) / samples
    x1 = x0[0] + radius * np.cos(theta)
    x2 = x0[1] + radius * np.sin(theta)
    v = field_.value(x1, x2)
    norm = np.hypot(v[0], v[1])
    scale = float(np.max(norm))
    if not scale > 0 or np.min(norm) <= max(1e-13 * scale, 1e-300):
        raise InconclusiveIndexError(f"field vanishes on the circle of radius {radius} about {tuple(x0)}")
    v0, v1 = v[:, :-1], v[:, 1:]
    cross = v0[0] * v1[1] - v0[1] * v1[0]
    dot = v0[0] * v1[0] + v0[1] * v1[1]
    exact = float(np.sum(np.arctan2(cross, dot))) / (2 * np.pi)
    index = int(round(exact))
    mid = 0.5 * (v0 + v1)
    dv = v1 - v0
    with np.errstate(all="ignore"):
        chord = float(np.sum((mid[0] * dv[1] - mid[1] * dv[0]) / (mid[0] ** 2 + mid[1] ** 2))) / (2 * np.pi)
    residue = abs(chord - index) if math.isfinite(chord) else math.inf
    return index, residue


def poincare_index(f, x0, radius: float = INDEX_RADIUS, samples: int = INDEX_SAMPLES) -> int:
    index, residue = winding_number(f, x0, radius, samples)
    if residue >= 0.1:
        raise UndersampledIndexError(
            f"rounding residue {residue:.3g} with {samples} samples at radius {radius}; increase samples"
        )
    return index


@dataclass(frozen=True)
class EigenStructure:
    e1: tuple[float, float]
    e2: tuple[float, float]
    alpha: float


def eigen_structure(J: Mat2, det_tol: float = DET_TOL, mat_tol: float = MAT_TOL) -> EigenStructure:
    """Null direction e1, its normal e2 and alpha with ``J e1 = 0``, ``J e2 = alpha e1``."""
    F = J.frobenius
    if F <= mat_tol:
        raise ZeroMatrixError("Jacobian vanishes")
    if abs(J.det) > det_tol * F * F:
        raise NotRankOneError(f"Jacobian is nondegenerate (det={J.det:.3g})")
    A = J.as_array()
    _, _, vt = np.linalg.svd(A)
    e1 = vt[-1] / np.hypot(*vt[-1])
    if e1[0] < 0 or (e1[0] == 0 and e1[1] < 0):
        e1 = -e1
    e1 = e1 + 0.0  # no negative zeros
    e2 = np.array([-e1[1], e1[0]]) + 0.0
    Je2 = A @ e2
    alpha = float(e1 @ Je2)
    if np.hypot(*(Je2 - alpha * e1)) > 1e-6 * F or abs(alpha) <= mat_tol:
        raise NotRankOneError("J e2 is not parallel to the null direction")
    return EigenStructure((float(e1[0]), float(e1[1])), (float(e2[0]), float(e2[1])), alpha)


def classify(J: Mat2, det_tol: float = DET_TOL, mat_tol: float = MAT_TOL) -> str:
    F = J.frobenius
    if F <= mat_tol:
        return "zero_matrix"
    det = J.det
    if abs(det) <= det_tol * F * F:
        return "degenerate_nonzero"
    if det < 0:
        return "saddle"
    tr = J.a11 + J.a22
    return "node" if tr * tr - 4 * det >= 0 else "focus_or_center"


@dataclass
class SingularPointReport:
    location: tuple[float, float]
    jacobian: Mat2
    det: float
    frobenius: float
    index: int | None
    kind: str
    e1: tuple[float, float] | None = None
    e2: tuple[float, float] | None = None
    alpha: float | None = None
    isolated: bool | None = None

    def to_dict(self) -> dict:
        return {
            "location": list(self.location),
            "jacobian": self.jacobian.to_list(),
            "det": self.det,
            "frobenius": self.frobenius,
            "index": self.index,
            "kind": self.kind,
            "e1": list(self.e1) if self.e1 else None,
            "e2": list(self.e2) if self.e2 else None,
            "alpha": self.alpha,
            "isolated": self.isolated,
        }


def singular_point_report(f, x0, radius: float = INDEX_RADIUS, samples: int = INDEX_SAMPLES, neighbours=()) -> SingularPointReport:
    field_ = as_field(f)
    J = field_.jacobian_at(x0)
    kind = classify(J)
    try:
        index = poincare_index(field_, x0, radius, samples)
    except WindingError:
        index = None
    e1 = e2 = alpha = None
    if kind == "degenerate_nonzero":
        try:
            es = eigen_structure(J)
            e1, e2, alpha = es.e1, es.e2, es.alpha
        except DegeneracyError:
            pass
    isolated = all(np.hypot(x0[0] - q[0], x0[1] - q[1]) > 10 * MERGE_RADIUS or tuple(q) == tuple(x0) for q in neighbours)
    return SingularPointReport(
        (float(x0[0]), float(x0[1])), J, J.det, J.frobenius, index, kind, e1, e2, alpha, isolated and index is not None
    )


@dataclass
class Assumption25Checklist:
    index_is_zero: bool
    jacobian_nonzero: bool
    transversality_nonzero: bool
    all_pass: bool = field(init=False)
    index: int | None = None
    transversality: float | None = None
    eigen: EigenStructure | None = None

    def __post_init__(self):
        self.all_pass = self.index_is_zero and self.jacobian_nonzero and self.transversality_nonzero

    def to_dict(self) -> dict:
        return {
            "index_is_zero": self.index_is_zero,
            "jacobian_nonzero": self.jacobian_nonzero,
            "transversality_nonzero": self.transversality_nonzero,
            "all_pass": self.all_pass,
        }


def assumption25_check(fof, x0, t0: float, radius: float = INDEX_RADIUS, samples: int = INDEX_SAMPLES,
                       root_tol: float = ROOT_TOL) -> Assumption25Checklist:
    """Degenerate-point hypotheses for the first-order field at ``(x0, t0)``."""
    from .taylor import transversality

    v = fof.at(t0)
    field_ = PlanarField.from_spec(v)
    val = field_.value(float(x0[0]), float(x0[1]))
    if np.hypot(*val) > root_tol:
        raise ValueError(f"{tuple(x0)} is not a zero of v(., {t0}): |v| = {np.hypot(*val):.3g}")
    index = poincare_index(field_, x0, radius, samples)
    J = field_.jacobian_at(x0)
    try:
        es = eigen_structure(J)
    except DegeneracyError:
        es = None
    trans = transversality(fof, x0, es.e2) if es is not None else None
    return Assumption25Checklist(
        index_is_zero=index == 0,
        jacobian_nonzero=es is not None,
        transversality_nonzero=trans is not None and abs(trans) > TRANS_TOL,
        index=index,
        transversality=trans,
        eigen=es,
    )


def regularity_screen(f, window: Window, seed_density: int = SEED_DENSITY) -> bool:
    """True iff every zero found in ``window`` is nondegenerate."""
    field_ = as_field(f)
    for p in find_singular_points(field_, window, seed_density):
        J = field_.jacobian_at(p)
        F = J.frobenius
        if not abs(J.det) > DET_TOL * F * F:
            return False
    return True
