import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _scenarios import rng_for, stream_scenario
from vortexbirth.fields import X1, X2, ZERO, VectorFieldSpec, const, div_field, eval_scalar, eval_vector
from vortexbirth.model import Constants, DimensionlessScenario, Scenario, nondimensionalize
from vortexbirth.taylor import (
    as3_expression,
    assumption_residuals,
    divergence_identity_check,
    first_order_coefficient,
    first_order_coefficient_dimensional,
    first_order_field,
    temperature_rate,
    transversality,
    window_grid,
)

GRID = window_grid(DimensionlessScenario.build(ZERO, ZERO).window, 21)


def _max(w):
    return float(np.max(np.abs(eval_vector(w, GRID))))


def test_rest_state_has_zero_coefficient():
    ds = DimensionlessScenario.build(VectorFieldSpec(ZERO, ZERO), const(4.0), K=30)
    assert _max(first_order_coefficient(ds)) == 0.0


def test_linear_shear_advects_itself_trivially():
    ds = DimensionlessScenario.build(VectorFieldSpec(X2, ZERO), ZERO)
    assert _max(first_order_coefficient(ds)) == 0.0


def test_canonical_coefficient(canon100):
    # u1 = (C4 x2, 2 C1 - K C3)
    u1 = first_order_coefficient(canon100)
    x1, x2 = GRID
    v = eval_vector(u1, GRID)
    assert np.array_equal(v[0], x2)
    assert np.all(v[1] == 2 - 100)


def test_temperature_rate_canonical(canon100):
    # lap T0 = 0, psi.grad T0 = psi2 * C3
    r = eval_scalar(temperature_rate(canon100), (0.5, 0.0))
    assert r == pytest.approx(-(1 + 0.25))


def test_field_at_zero_is_psi(canon100):
    fof = first_order_field(canon100)
    assert np.array_equal(fof(GRID[0], GRID[1], 0.0), eval_vector(canon100.psi, GRID))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_first_order_field_is_linear_in_t(seed, t1, t2):
    fof = first_order_field(stream_scenario(rng_for(seed)))
    ta, tb, tc = 0.0, t1, t1 + t2 + 0.1
    va, vb, vc = (fof(GRID[0], GRID[1], t) for t in (ta, tb, tc))
    lam = (tb - ta) / (tc - ta)
    scale = 1 + np.max(np.abs(va)) + np.max(np.abs(vc))
    assert np.max(np.abs(vb - ((1 - lam) * va + lam * vc))) <= 1e-12 * scale


def test_canonical_residuals_vanish(canon100):
    r = assumption_residuals(canon100)
    assert r.max_abs_r_div == 0.0 and r.max_abs_r_as3 == 0.0
    assert r.satisfied


def test_divergent_psi_flagged():
    r = assumption_residuals(DimensionlessScenario.build(VectorFieldSpec(X1, ZERO), ZERO))
    assert r.max_abs_r_div == 1.0
    assert not r.satisfied


def test_shear_cross_term_is_zero():
    r = assumption_residuals(DimensionlessScenario.build(VectorFieldSpec(X2, ZERO), ZERO))
    assert r.max_abs_r_as3 == 0.0


def test_divergence_identity_canonical(canon100):
    assert divergence_identity_check(canon100, 0.02) <= 1e-12


def test_divergence_at_base_point_is_r_div():
    ds = DimensionlessScenario.build(VectorFieldSpec(X1 * X2, X2**2), X1)
    v0 = first_order_field(ds).at(0.0)
    a = eval_scalar(div_field(v0), GRID)
    b = eval_scalar(assumption_residuals(ds).r_div, GRID)
    assert np.array_equal(a, b)


def test_divergence_equals_minus_two_t_c():
    # psi = (0, x1^2) has no cross term; T0 = c x2^2 / K gives (K/2) lap T0 = c
    K, c, t = 40.0, 0.3, 0.1
    ds = DimensionlessScenario.build(VectorFieldSpec(ZERO, X1**2), const(c / K) * X2**2, K=K)
    r = eval_scalar(as3_expression(ds), GRID)
    assert np.allclose(r, c, rtol=0, atol=1e-15)
    d = eval_scalar(div_field(first_order_field(ds).at(t)), GRID)
    assert np.allclose(d, -0.2 * c, rtol=0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.01, 0.1, 0.5]))
def test_divergence_identity_random_stream_scenarios(seed, t):
    assert divergence_identity_check(stream_scenario(rng_for(seed)), t) <= 1e-10


def test_divergence_identity_rejects_negative_t(canon100):
    with pytest.raises(ValueError):
        divergence_identity_check(canon100, -1.0)


def test_transversality_canonical(canon100):
    fof = first_order_field(canon100)
    assert transversality(fof, (0, 0), (0, 1)) == 2 - 100
    assert transversality(fof, (0, 0), (1, 0)) == 0.0


def test_transversality_rest_state():
    fof = first_order_field(DimensionlessScenario.build(VectorFieldSpec(ZERO, ZERO), ZERO))
    assert transversality(fof, (0.3, 0.1), (0, 1)) == 0.0


def test_transversality_requires_unit_vector(canon100):
    with pytest.raises(ValueError):
        transversality(first_order_field(canon100), (0, 0), (0, 2))


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.2, 5), st.floats(0.1, 20), st.floats(0.2, 5), st.floats(0.2, 5),
)
def test_dimensional_coefficient_obeys_scaling(mu, beta, L, theta):
    c = Constants(mu=mu, beta=beta, L=L, theta=theta, kappa=1.0)
    s = Scenario(VectorFieldSpec(X2**2, X1), 1 + X2 + X1**2, VectorFieldSpec(X2, X1 * X2), constants=c)
    scaled = first_order_coefficient(nondimensionalize(s))
    dim = first_order_coefficient_dimensional(s)
    xp = (0.4, -0.9)
    lhs = eval_vector(scaled, xp)
    rhs = (L**3 / mu**2) * eval_vector(dim, (L * xp[0], L * xp[1]))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
