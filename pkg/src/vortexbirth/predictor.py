"""Predict when and where a vortex is born from initial velocity, temperature and force.

The search works on the first-order field ``v = psi + t u1``: bisect on
whether ``v(., t)`` has a zero in the window, refine the fold point, then
check the degenerate-point hypotheses there.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ZERO, Mat2, VectorFieldSpec
from .model import Constants, DimensionlessScenario, Scenario, Window
from .taylor import AssumptionResiduals, FirstOrderField, assumption_residuals, first_order_field
from .topology import (
    ROOT_TOL,
    SEED_DENSITY,
    Assumption25Checklist,
    PlanarField,
    WindingError,
    assumption25_check,
    find_singular_points,
    singular_point_report,
)

log = logging.getLogger(__name__)

EPSILON = 0.05
T_TOL = 1e-6
MAGNITUDE_THRESHOLD = 10.0
CLUSTER_RADIUS = 1e-3

CERTIFIED = "separation_certified"
REJECTED = "separation_rejected"
INCONCLUSIVE = "inconclusive"


@dataclass
class SeparationEvent:
    x_bar: tuple[float, float] | None
    t0: float | None
    t_bar: float | None
    x_bar_dim: tuple[float, float] | None
    transversality: float | None
    checklist: Assumption25Checklist | None
    residuals: AssumptionResiduals | None
    zero_count_before: int | None
    zero_count_after: int | None
    verdict: str
    jacobian: Mat2 | None = None
    index: int | None = None
    message: str = ""
    others: list["SeparationEvent"] = field(default_factory=list)

    def invariant_holds(self) -> bool:
        if self.verdict != CERTIFIED:
            return True
        return bool(
            self.checklist is not None
            and self.checklist.all_pass
            and self.residuals is not None
            and self.residuals.satisfied
            and self.zero_count_before == 0
            and (self.zero_count_after or 0) >= 1
        )


def _scales(ds: DimensionlessScenario) -> Constants:
    return ds.scales if ds.scales is not None else Constants()


def _with_dimensions(ev: SeparationEvent, c: Constants) -> SeparationEvent:
    if ev.t0 is not None:
        ev.t_bar = c.time_scale * ev.t0
    if ev.x_bar is not None:
        ev.x_bar_dim = (c.L * ev.x_bar[0], c.L * ev.x_bar[1])
    return ev


def _empty(verdict: str, residuals, message: str) -> SeparationEvent:
    return SeparationEvent(None, None, None, None, None, None, residuals, None, None, verdict, message=message)


def _refine_fold(fof: FirstOrderField, x: np.ndarray, t: float, iters: int = 40):
    """Newton on (v(x,t), det Dv(x,t)) = 0 in the unknowns (x1, x2, t)."""
    psi_f = PlanarField.from_spec(fof.psi)
    u1_f = PlanarField.from_spec(fof.u1)

    def parts(q):
        x1, x2, tt = q
        v = psi_f.value(x1, x2) + tt * u1_f.value(x1, x2)
        J = psi_f.jacobian(x1, x2) + tt * u1_f.jacobian(x1, x2)
        return v, J

    def G(q):
        v, J = parts(q)
        return np.array([v[0], v[1], (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]) / scale])

    _, J0 = parts((x[0], x[1], t))
    scale = float(np.sqrt(np.sum(J0**2))) or 1.0
    q = np.array([x[0], x[1], t], dtype=float)
    g = G(q)
    h = 1e-7
    for _ in range(iters):
        v, J = parts(q)
        A = np.empty((3, 3))
        A[:2, :2] = J
        A[:2, 2] = u1_f.value(q[0], q[1])
        for k in range(3):
            dq = np.zeros(3)
            dq[k] = h * (1 + abs(q[k])) if k == 2 else h
            A[2, k] = (G(q + dq)[2] - G(q - dq)[2]) / (2 * dq[k])
        try:
            step = np.linalg.solve(A, -g)
        except np.linalg.LinAlgError:
            break
        q_new = q + step
        g_new = G(q_new)
        if not np.all(np.isfinite(g_new)) or np.linalg.norm(g_new) > np.linalg.norm(g):
            break
        q, g = q_new, g_new
        if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(q)):
            break
    return q, g


def _clusters(points, radius: float) -> list[np.ndarray]:
    groups: list[list[np.ndarray]] = []
    for p in map(np.asarray, points):
        for g in groups:
            if min(np.hypot(*(p - q)) for q in g) <= radius:
                g.append(p)
                break
        else:
            groups.append([p])
    return [np.mean(g, axis=0) for g in groups]


def count_zeros(fof: FirstOrderField, t: float, window: Window, seed_density: int = SEED_DENSITY) -> int:
    return len(find_singular_points(fof.at(t), window, seed_density))


def zero_count_sweep(ds: DimensionlessScenario, t_max: float, n: int = 51,
                     seed_density: int = SEED_DENSITY) -> list[tuple[float, int]]:
    fof = first_order_field(ds)
    ts = np.linspace(0.0, t_max, n)
    return [(float(t), count_zeros(fof, float(t), ds.window, seed_density)) for t in ts]


def locate_separation(ds: DimensionlessScenario, t_max: float, seed_density: int = SEED_DENSITY,
                      epsilon: float = EPSILON, scan: int = 16) -> SeparationEvent:
    """Earliest birth of a zero of the first-order field in ``(0, t_max]``.

    Returns an event whose verdict is ``separation_rejected`` when the
    initial data fail the residual checks or the degenerate-point
    hypotheses, ``inconclusive`` when no zero appears (or zero counts do not
    show a birth), and ``separation_certified`` otherwise.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    residuals = assumption_residuals(ds)
    if not residuals.satisfied:
        return _empty(REJECTED, residuals, "initial data violate the divergence/compatibility conditions")

    fof = first_order_field(ds)
    window = ds.window

    def roots(t):
        return find_singular_points(fof.at(t), window, seed_density)

    if roots(0.0):
        return _empty(INCONCLUSIVE, residuals, "initial velocity already has zeros in the window")
    # coarse scan so the bisection brackets the first appearance of a zero
    grid = np.linspace(0.0, float(t_max), scan + 1)
    lo = hi = None
    for a, b in zip(grid[:-1], grid[1:]):
        if roots(float(b)):
            lo, hi = float(a), float(b)
            break
    if hi is None:
        return _empty(INCONCLUSIVE, residuals, f"no zero of v appears for t <= {t_max}")

    # bisect well past T_TOL so the emerging pair is nearly coincident
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if roots(mid):
            hi = mid
        else:
            lo = mid
    found = roots(hi)
    candidates = []
    for centre in _clusters(found, CLUSTER_RADIUS):
        q, g = _refine_fold(fof, centre, hi)
        if (np.hypot(g[0], g[1]) <= ROOT_TOL and abs(q[2] - hi) <= T_TOL
                and np.hypot(*(q[:2] - centre)) <= CLUSTER_RADIUS):
            candidates.append(((float(q[0]), float(q[1])), float(q[2])))
        else:
            candidates.append(((float(centre[0]), float(centre[1])), hi))
    candidates.sort(key=lambda c: (c[1], c[0]))

    events = [_certify(fof, ds, residuals, x_bar, t0, epsilon, seed_density) for x_bar, t0 in candidates]
    primary = events[0]
    primary.others = events[1:]
    return primary


def _certify(fof, ds, residuals, x_bar, t0, epsilon, seed_density) -> SeparationEvent:
    window = ds.window
    before = count_zeros(fof, t0 * (1 - epsilon), window, seed_density)
    after = count_zeros(fof, t0 * (1 + epsilon), window, seed_density)
    v = fof.at(t0)
    others = find_singular_points(v, window, seed_density)
    try:
        checklist = assumption25_check(fof, x_bar, t0)
        point = singular_point_report(v, x_bar, neighbours=others)
    except (WindingError, ValueError) as exc:
        ev = SeparationEvent(x_bar, t0, None, None, None, None, residuals, before, after, INCONCLUSIVE,
                             message=f"index not computable: {exc}")
        return _with_dimensions(ev, _scales(ds))
    message = ""
    if checklist.all_pass and before == 0 and after >= 1:
        verdict = CERTIFIED
    elif not checklist.all_pass:
        verdict = REJECTED
        message = "degenerate-point hypotheses fail at the emerging zero"
    else:
        verdict = INCONCLUSIVE
        message = f"zero counts around t0 are {before} -> {after}"
    ev = SeparationEvent(
        x_bar=x_bar,
        t0=t0,
        t_bar=None,
        x_bar_dim=None,
        transversality=checklist.transversality,
        checklist=checklist,
        residuals=residuals,
        zero_count_before=before,
        zero_count_after=after,
        verdict=verdict,
        jacobian=point.jacobian,
        index=checklist.index,
        message=message,
    )
    return _with_dimensions(ev, _scales(ds))


# Canonical family: psi = (0, 1 + C1 x1^2), T0 = C2 + C3 x2, F0 = (C4 x2, 0)


@dataclass(frozen=True)
class CanonicalConstants:
    K: float
    C1: float
    C2: float
    C3: float
    C4: float

    @property
    def drive(self) -> float:
        return self.K * self.C3 - 2 * self.C1


def canonical_scenario(K: float, C1: float = 1.0, C2: float = 1.0, C3: float = 1.0, C4: float = 1.0,
                       window: Window | None = None, invPr: float = 1.0) -> DimensionlessScenario:
    from .fields import X1, X2, const

    psi = VectorFieldSpec(ZERO, 1 + const(C1) * X1**2)
    T0 = const(C2) + const(C3) * X2
    F0 = VectorFieldSpec(const(C4) * X2, ZERO)
    return DimensionlessScenario.build(psi, T0, F0, K=K, invPr=invPr, window=window)


def detect_canonical(ds: DimensionlessScenario, tol: float = 1e-10) -> CanonicalConstants | None:
    """Recover C1..C4 if ``ds`` belongs to the canonical family, else None."""
    from .taylor import window_grid

    X, Y = window_grid(ds.window, 21)
    p1, p2 = ds.psi.c1(X, Y), ds.psi.c2(X, Y)
    T, F1, F2 = ds.T0(X, Y), ds.F0.c1(X, Y), ds.F0.c2(X, Y)
    C1 = ds.psi.c2(1.0, 0.0) - 1.0
    C2 = ds.T0(0.0, 0.0)
    C3 = ds.T0(0.0, 1.0) - C2
    C4 = ds.F0.c1(0.0, 1.0) - ds.F0.c1(0.0, 0.0)
    checks = [
        p1,
        p2 - (1 + C1 * X**2),
        T - (C2 + C3 * Y),
        F1 - C4 * Y,
        F2,
    ]
    scale = 1 + max(abs(C1), abs(C2), abs(C3), abs(C4))
    if max(float(np.max(np.abs(c))) for c in checks) > tol * scale:
        return None
    return CanonicalConstants(ds.K, C1, C2, C3, C4)


def canonical_roots(K: float, C1: float, C3: float, t: float, convention: str = "direct") -> list[tuple[float, float]]:
    """Closed-form zeros (x1, 0) of the canonical first-order field at time t.

    ``direct`` expands v2 = 1 + C1 x1^2 + t (2 C1 - K C3); ``t_scaled`` uses
    the alternative v2 = 1 + t (2 C1 - K C3) - C1 x1^2 t, whose quadratic
    term carries a factor -t. Both give the same t0 and Jacobian at t0.
    """
    drive = K * C3 - 2 * C1
    if convention not in ("direct", "t_scaled"):
        raise ValueError(f"unknown convention {convention!r}")
    if C1 == 0:
        # v2 no longer depends on x1: either no zeros or the whole axis
        return [(0.0, 0.0)] if drive * t == 1 else []
    if convention == "direct":
        sq = (drive * t - 1) / C1
    elif convention == "t_scaled":
        if t == 0:
            return []
        sq = (1 - drive * t) / (C1 * t)
    if sq < 0:
        return []
    if sq == 0:
        return [(0.0, 0.0)]
    r = math.sqrt(sq)
    return [(-r, 0.0), (r, 0.0)]


def closed_form_theorem46(K: float, C1: float, C2: float, C3: float, C4: float,
                          window: Window | None = None, epsilon: float = EPSILON) -> SeparationEvent:
    """Exact fold of the canonical family: t0 = 1/(K C3 - 2 C1) at the origin."""
    drive = K * C3 - 2 * C1
    if not drive > 0:
        raise ValueError(f"K*C3 - 2*C1 = {drive} admits no positive separation time")
    window = window or Window()
    t0 = 1.0 / drive
    es_ok = C4 != 0
    from .topology import EigenStructure

    checklist = Assumption25Checklist(index_is_zero=True, jacobian_nonzero=es_ok, transversality_nonzero=True,
                                      index=0, transversality=-drive,
                                      eigen=EigenStructure((1.0, 0.0), (0.0, 1.0), C4 * t0) if es_ok else None)
    residuals = AssumptionResiduals(ZERO, ZERO, 0.0, 0.0)

    def inside(pts):
        return sum(1 for p in pts if window.contains(p[0], p[1]))

    before = inside(canonical_roots(K, C1, C3, t0 * (1 - epsilon)))
    after = inside(canonical_roots(K, C1, C3, t0 * (1 + epsilon)))
    ok = before == 0 and after >= 1 and checklist.all_pass
    return SeparationEvent(
        x_bar=(0.0, 0.0),
        t0=t0,
        t_bar=t0,
        x_bar_dim=(0.0, 0.0),
        transversality=2 * C1 - K * C3,
        checklist=checklist,
        residuals=residuals,
        zero_count_before=before,
        zero_count_after=after,
        verdict=CERTIFIED if ok else INCONCLUSIVE,
        jacobian=Mat2(0.0, C4 * t0, 0.0, 0.0),
        index=0,
    )


@dataclass(frozen=True)
class InterpretationReport:
    K_C3_minus_2C1: float | None
    thermal_dominated: bool
    velocity_dominated: bool
    magnitude_flag: bool
    threshold: float = MAGNITUDE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "K_C3_minus_2C1": self.K_C3_minus_2C1,
            "thermal_dominated": self.thermal_dominated,
            "velocity_dominated": self.velocity_dominated,
            "magnitude_flag": self.magnitude_flag,
            "threshold": self.threshold,
        }


def interpretation(source, threshold: float = MAGNITUDE_THRESHOLD) -> InterpretationReport:
    """Which driver dominates the separation: the thermal group K*C3 or -2*C1.

    ``source`` is a :class:`CanonicalConstants`, a ``(K, C1, C3)`` triple or a
    :class:`DimensionlessScenario` (flags are all false when it is not of
    canonical form).
    """
    if isinstance(source, DimensionlessScenario):
        source = detect_canonical(source)
        if source is None:
            return InterpretationReport(None, False, False, False, threshold)
    if isinstance(source, CanonicalConstants):
        K, C1, C3 = source.K, source.C1, source.C3
    else:
        K, C1, C3 = source
    drive = K * C3 - 2 * C1
    return InterpretationReport(
        K_C3_minus_2C1=drive,
        thermal_dominated=K * C3 >= threshold,
        velocity_dominated=-2 * C1 >= threshold,
        magnitude_flag=drive >= threshold,
        threshold=threshold,
    )


# Serialization


def _num(x):
    if x is None:
        return None
    if isinstance(x, (tuple, list)):
        return [_num(v) for v in x]
    return float(x)


def event_to_dict(ev: SeparationEvent) -> dict:
    es = ev.checklist.eigen if ev.checklist is not None else None
    return {
        "t0": _num(ev.t0),
        "x_bar": _num(ev.x_bar),
        "t_bar_dimensional": _num(ev.t_bar),
        "x_bar_dimensional": _num(ev.x_bar_dim),
        "transversality": _num(ev.transversality),
        "jacobian": ev.jacobian.to_list() if ev.jacobian is not None else None,
        "index": ev.index,
        "e1": _num(es.e1) if es else None,
        "e2": _num(es.e2) if es else None,
        "alpha": _num(es.alpha) if es else None,
        "checklist": ev.checklist.to_dict() if ev.checklist is not None else None,
        "zero_count_before": ev.zero_count_before,
        "zero_count_after": ev.zero_count_after,
        "verdict": ev.verdict,
        "message": ev.message,
    }


def build_report(ev: SeparationEvent, ds: DimensionlessScenario, scenario: Scenario | None = None) -> dict:
    report = event_to_dict(ev)
    report.pop("message")
    canon = detect_canonical(ds)
    report.update(
        {
            "scenario_hash": scenario.hash() if scenario is not None else None,
            "K": ds.K,
            "invPr": ds.invPr,
            "residuals": ev.residuals.to_dict() if ev.residuals is not None else None,
            "interpretation": interpretation(canon if canon else ds).to_dict(),
            "message": ev.message,
            "additional_events": [event_to_dict(o) for o in ev.others],
        }
    )
    if canon is not None:
        t0 = 1.0 / canon.drive if canon.drive > 0 else None
        report["canonical"] = {
            "C1": canon.C1,
            "C2": canon.C2,
            "C3": canon.C3,
            "C4": canon.C4,
            "closed_form_t0": t0,
            # alternative expansion of v2 kept alongside the implemented one
            "conventions": {
                "direct": "v2 = 1 + C1*x1^2 + t*(2*C1 - K*C3)",
                "t_scaled": "v2 = 1 + t*(2*C1 - K*C3) - C1*x1^2*t",
                "implemented": "direct",
                "roots_after_t0": {
                    conv: _num(canonical_roots(canon.K, canon.C1, canon.C3, t0 * (1 + EPSILON), conv)) if t0 else []
                    for conv in ("direct", "t_scaled")
                },
            },
        }
    return report
