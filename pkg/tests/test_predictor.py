import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexbirth.fields import X1, X2, ZERO, VectorFieldSpec, const
from vortexbirth.model import Constants, DimensionlessScenario
from vortexbirth.predictor import (
    CERTIFIED,
    INCONCLUSIVE,
    REJECTED,
    build_report,
    canonical_roots,
    canonical_scenario,
    closed_form_theorem46,
    count_zeros,
    detect_canonical,
    interpretation,
    locate_separation,
    zero_count_sweep,
)
from vortexbirth.taylor import first_order_field


@pytest.fixture(scope="module")
def event100(canon100):
    return locate_separation(canon100, 0.05)


def test_canonical_event(event100):
    ev = event100
    assert ev.verdict == CERTIFIED
    assert abs(ev.t0 - 1 / 98) <= 1e-6
    assert np.hypot(*ev.x_bar) <= 1e-5
    assert (ev.zero_count_before, ev.zero_count_after) == (0, 2)
    assert ev.invariant_holds()
    assert ev.others == []


def test_uniform_stream_is_inconclusive():
    ds = DimensionlessScenario.build(VectorFieldSpec(ZERO, const(1.0)), ZERO)
    ev = locate_separation(ds, 0.5)
    assert ev.verdict == INCONCLUSIVE
    assert ev.t0 is None


def test_divergent_initial_velocity_is_rejected():
    ds = DimensionlessScenario.build(VectorFieldSpec(X1, ZERO), ZERO)
    ev = locate_separation(ds, 0.5)
    assert ev.verdict == REJECTED
    assert ev.invariant_holds()


def test_initial_zeros_are_inconclusive():
    # C1 < 0 puts zeros at x1 = +-1 already at t = 0
    ev = locate_separation(canonical_scenario(100.0, C1=-1.0), 0.1)
    assert ev.verdict == INCONCLUSIVE
    assert "already" in ev.message


def test_tmax_must_be_positive(canon100):
    with pytest.raises(ValueError):
        locate_separation(canon100, 0.0)


def test_event_outside_tmax_is_inconclusive(canon100):
    assert locate_separation(canon100, 0.5 / 98).verdict == INCONCLUSIVE


def test_shifted_fold_is_located():
    # psi = (0, 1 + (x1 - 0.5)^2) moves the birth point to x1 = 0.5
    psi = VectorFieldSpec(ZERO, 1 + (X1 - 0.5) ** 2)
    ds = DimensionlessScenario.build(psi, 1 + X2, VectorFieldSpec(X2, ZERO), K=50)
    ev = locate_separation(ds, 0.1)
    assert ev.verdict == CERTIFIED
    assert ev.t0 == pytest.approx(1 / 48, abs=1e-9)
    assert ev.x_bar == pytest.approx((0.5, 0.0), abs=1e-6)


def test_closed_form_values():
    ev = closed_form_theorem46(100, 1, 1, 1, 1)
    assert ev.t0 == 1 / 98
    assert ev.transversality == -98
    assert ev.verdict == CERTIFIED
    ev = closed_form_theorem46(102, 0, 1, 1, 3)
    assert ev.t0 == 1 / 102
    assert ev.jacobian.to_list() == [[0.0, 3 / 102], [0.0, 0.0]]


def test_closed_form_with_flat_profile_is_not_certified():
    # C1 = 0: v2 = 1 - 102 t vanishes on a whole line at t0, no pair is born
    ev = closed_form_theorem46(102, 0, 1, 1, 1)
    assert (ev.zero_count_before, ev.zero_count_after) == (0, 0)
    assert ev.verdict == INCONCLUSIVE


@pytest.mark.parametrize("K,C1", [(2, 1), (1, 5)])
def test_closed_form_needs_positive_drive(K, C1):
    with pytest.raises(ValueError):
        closed_form_theorem46(K, C1, 1, 1, 1)


@settings(max_examples=8, deadline=None)
@given(st.floats(15, 200), st.floats(0.2, 3), st.floats(0.5, 2), st.floats(0.2, 3))
def test_locate_agrees_with_closed_form(K, C1, C3, C4):
    ds = canonical_scenario(K, C1=C1, C3=C3, C4=C4)
    exact = closed_form_theorem46(K, C1, 1.0, C3, C4)
    ev = locate_separation(ds, 2 * exact.t0)
    assert ev.verdict == CERTIFIED
    assert abs(ev.t0 - exact.t0) <= 1e-5
    assert np.allclose(ev.jacobian.as_array(), exact.jacobian.as_array(), atol=1e-9)


def test_zero_count_sweep_is_monotone_for_canonical(canon100):
    rows = zero_count_sweep(canon100, 0.05, n=11)
    counts = [c for _, c in rows]
    assert counts[0] == 0 and counts[-1] == 2
    assert counts == sorted(counts)


def test_roots_match_closed_form(canon100):
    fof = first_order_field(canon100)
    t = 1.3 / 98
    r = canonical_roots(100, 1, 1, t)
    assert r[1][0] == pytest.approx(math.sqrt(98 * t - 1), rel=1e-14)
    assert count_zeros(fof, t, canon100.window) == 2


def test_alternative_convention_roots():
    # 1 + t(2 - K) - x1^2 t = 0 -> x1^2 = (1 - 98 t)/t for C1 = 1
    t = 0.5 / 98
    r = canonical_roots(100, 1, 1, t, "t_scaled")
    assert r[1][0] == pytest.approx(math.sqrt((1 - 98 * t) / t))
    assert canonical_roots(100, 1, 1, 2 / 98, "t_scaled") == []
    with pytest.raises(ValueError):
        canonical_roots(100, 1, 1, t, "sideways")


def test_detect_canonical(canon100):
    c = detect_canonical(canonical_scenario(30, C1=0.5, C2=2, C3=1.5, C4=-1))
    assert c is not None
    assert (c.K, c.C1, c.C2, c.C3, c.C4) == pytest.approx((30, 0.5, 2, 1.5, -1))
    assert detect_canonical(DimensionlessScenario.build(VectorFieldSpec(X2, ZERO), ZERO)) is None


@pytest.mark.parametrize(
    "K,C1,C3,flags",
    [
        (100, 1, 1, (True, False, True)),
        (1, -50, 1, (False, True, True)),
        (1, 0.1, 1, (False, False, False)),
    ],
)
def test_interpretation_flags(K, C1, C3, flags):
    r = interpretation((K, C1, C3))
    assert (r.thermal_dominated, r.velocity_dominated, r.magnitude_flag) == flags


def test_interpretation_non_canonical_is_all_false():
    r = interpretation(DimensionlessScenario.build(VectorFieldSpec(X2, ZERO), ZERO, K=500))
    assert not (r.thermal_dominated or r.velocity_dominated or r.magnitude_flag)


def test_report_is_json_and_deterministic(canon100, event100):
    a = json.dumps(build_report(event100, canon100), sort_keys=True)
    b = json.dumps(build_report(locate_separation(canon100, 0.05), canon100), sort_keys=True)
    assert a == b
    rep = json.loads(a)
    assert rep["verdict"] == CERTIFIED
    assert rep["canonical"]["conventions"]["implemented"] == "direct"
    assert len(rep["canonical"]["conventions"]["roots_after_t0"]["direct"]) == 2


def test_report_numbers_rederive(canon100, event100):
    rep = build_report(event100, canon100)
    assert rep["transversality"] == first_order_field(canon100).dt(*rep["x_bar"])[1]
    assert rep["alpha"] == pytest.approx(rep["jacobian"][0][1], rel=1e-12)
    assert rep["t_bar_dimensional"] == rep["t0"]


def test_dimensional_time_uses_scales():
    c = Constants(mu=1.0, L=1e3, beta=1e-4, theta=1.0)
    base = canonical_scenario(100.0)
    ds = DimensionlessScenario(base.psi, base.T0, base.F0, base.Q, c.K, 1.0, base.window, c)
    ev = locate_separation(ds, 0.05)
    assert ev.t_bar == pytest.approx(1e6 / 98, rel=1e-6)
