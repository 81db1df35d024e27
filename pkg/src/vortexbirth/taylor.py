"""First-order-in-time expansion of the velocity and its compatibility residuals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    ScalarExpr,
    VectorFieldSpec,
    advect,
    const,
    directional,
    div_field,
    eval_scalar,
    eval_vector,
    grad,
    laplacian,
    partial,
    vector_laplacian,
)
from .model import DimensionlessScenario, Scenario, Window

RESIDUAL_GRID = 101
RESIDUAL_TOL = 1e-8


def _first_order(psi: VectorFieldSpec, T0: ScalarExpr, F0: VectorFieldSpec, viscosity: float, thermal: float):
    lap = vector_laplacian(psi).scale(viscosity)
    adv = advect(psi, psi)
    gT = grad(T0).scale(thermal)
    return lap - adv - gT + F0


def first_order_coefficient(ds: DimensionlessScenario) -> VectorFieldSpec:
    """du/dt at t=0 of the scaled model: lap(psi) - (psi.grad)psi - K grad(T0) + F0."""
    return _first_order(ds.psi, ds.T0, ds.F0, 1.0, ds.K)


def first_order_coefficient_dimensional(s: Scenario) -> VectorFieldSpec:
    """Same coefficient with physical viscosity ``mu`` and thermal factor ``beta``."""
    c = s.constants
    return _first_order(s.psi, s.T0, s.F0, c.mu, c.beta)


def temperature_rate(ds: DimensionlessScenario) -> ScalarExpr:
    """dT/dt at t=0: invPr lap(T0) - (psi.grad) T0 + Q."""
    return const(ds.invPr) * laplacian(ds.T0) - directional(ds.psi, ds.T0) + ds.Q


@dataclass(frozen=True)
class FirstOrderField:
    """v(x, t) = psi(x) + t u1(x)."""

    psi: VectorFieldSpec
    u1: VectorFieldSpec

    def __call__(self, x1, x2, t: float) -> np.ndarray:
        p = eval_vector(self.psi, (x1, x2))
        if t == 0:
            return p
        return p + t * eval_vector(self.u1, (x1, x2))

    def dt(self, x1, x2) -> np.ndarray:
        return eval_vector(self.u1, (x1, x2))

    def at(self, t: float) -> VectorFieldSpec:
        """Closed-form v(., t) for a frozen t."""
        if t == 0:
            return self.psi
        return self.psi + self.u1.scale(t)


def first_order_field(ds: DimensionlessScenario) -> FirstOrderField:
    return FirstOrderField(ds.psi, first_order_coefficient(ds))


@dataclass(frozen=True)
class AssumptionResiduals:
    r_div: ScalarExpr
    r_as3: ScalarExpr
    max_abs_r_div: float
    max_abs_r_as3: float

    @property
    def satisfied(self) -> bool:
        return self.max_abs_r_div <= RESIDUAL_TOL and self.max_abs_r_as3 <= RESIDUAL_TOL

    def to_dict(self) -> dict:
        return {
            "r_div": self.r_div.to_text(),
            "r_as3": self.r_as3.to_text(),
            "max_abs_r_div": self.max_abs_r_div,
            "max_abs_r_as3": self.max_abs_r_as3,
            "threshold": RESIDUAL_TOL,
            "satisfied": self.satisfied,
        }


def window_grid(window: Window, n: int = RESIDUAL_GRID):
    x1 = np.linspace(window.xmin, window.xmax, n)
    x2 = np.linspace(window.ymin, window.ymax, n)
    return np.meshgrid(x1, x2, indexing="ij")


def _sup(e: ScalarExpr, window: Window, n: int = RESIDUAL_GRID) -> float:
    return float(np.max(np.abs(eval_scalar(e, window_grid(window, n)))))


def as3_expression(ds: DimensionlessScenario) -> ScalarExpr:
    p1, p2 = ds.psi.c1, ds.psi.c2
    cross = partial(p1, "x2") * partial(p2, "x1")
    square = partial(p1, "x1") ** 2
    return cross + square + const(ds.K / 2) * laplacian(ds.T0) - const(0.5) * div_field(ds.F0)


def assumption_residuals(ds: DimensionlessScenario) -> AssumptionResiduals:
    r_div = div_field(ds.psi)
    r_as3 = as3_expression(ds)
    return AssumptionResiduals(r_div, r_as3, _sup(r_div, ds.window), _sup(r_as3, ds.window))


def divergence_identity_check(ds: DimensionlessScenario, t: float) -> float:
    """max |div v(., t) + 2 t r_as3| over the window grid.

    Vanishes identically when psi is divergence-free; for other inputs the
    value measures how far the identity is from holding.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    v = first_order_field(ds).at(t)
    combo = div_field(v) + const(2.0 * t) * as3_expression(ds)
    return _sup(combo, ds.window)


def transversality(fof: FirstOrderField, x_bar, e2) -> float:
    e2 = np.asarray(e2, dtype=float)
    if abs(np.hypot(*e2) - 1.0) > 1e-9:
        raise ValueError("e2 must be a unit vector")
    return float(fof.dt(float(x_bar[0]), float(x_bar[1])) @ e2)
