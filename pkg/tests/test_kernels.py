import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexbirth import _kernels_py as ref
from vortexbirth import kernels

compiled = pytest.importorskip("vortexbirth._kernels")

H = (0.13, 0.07)


def _fields(seed, shape=(19, 23), n=6):
    rng = np.random.default_rng(seed)
    return [np.ascontiguousarray(rng.standard_normal(shape)) for _ in range(n)]


def _interior_zero(a):
    a = a.copy()
    a[0, :] = a[-1, :] = a[:, 0] = a[:, -1] = 0
    return a


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_advance_backends_agree(seed):
    u1, u2, T, f1, f2, q = _fields(seed)
    args = (u1, u2, T, f1, f2, q, 37.0, 0.6, 1e-3) + H
    for a, b in zip(ref.advance(*args), compiled.advance(*args)):
        assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_divergence_and_projection_backends_agree(seed):
    u1, u2, lam = _fields(seed, n=3)
    lam = _interior_zero(lam)
    assert np.allclose(ref.divergence(u1, u2, *H), compiled.divergence(u1, u2, *H), rtol=1e-13, atol=1e-12)
    assert np.allclose(ref.projection_operator(lam, *H), compiled.projection_operator(lam, *H), rtol=1e-13, atol=1e-11)
    a1, a2, b1, b2 = u1.copy(), u2.copy(), u1.copy(), u2.copy()
    ref.correct_velocity(a1, a2, lam, *H)
    compiled.correct_velocity(b1, b2, lam, *H)
    assert np.allclose(a1, b1, atol=1e-12) and np.allclose(a2, b2, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bilinear_backends_agree(seed):
    (f,) = _fields(seed, n=1)
    rng = np.random.default_rng(seed + 1)
    xs = rng.uniform(-1.0, 2.5, 50)
    ys = rng.uniform(-1.0, 1.8, 50)
    assert np.allclose(ref.bilinear(f, -1.0, -1.0, *H, xs, ys), compiled.bilinear(f, -1.0, -1.0, *H, xs, ys),
                       rtol=1e-13, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_operator_is_symmetric_positive(seed):
    lam, mu = (_interior_zero(a) for a in _fields(seed, n=2))
    for mod in (ref, compiled):
        A_lam = mod.projection_operator(lam, *H)
        A_mu = mod.projection_operator(mu, *H)
        assert np.vdot(A_lam, mu) == pytest.approx(np.vdot(lam, A_mu), rel=1e-10)
        assert np.vdot(A_lam, lam) > 0


def test_bilinear_is_exact_for_bilinear_data():
    x = -1.0 + H[0] * np.arange(19)
    y = -1.0 + H[1] * np.arange(23)
    X, Y = np.meshgrid(x, y, indexing="ij")
    f = np.ascontiguousarray(2 + X - 3 * Y + 0.5 * X * Y)
    xs, ys = np.array([0.011, 1.2, -0.95]), np.array([0.3, -0.2, 0.44])
    exact = 2 + xs - 3 * ys + 0.5 * xs * ys
    for mod in (ref, compiled):
        assert np.allclose(mod.bilinear(f, -1.0, -1.0, *H, xs, ys), exact, atol=1e-13)


def test_stencil_is_exact_on_quadratics():
    x = -1.0 + H[0] * np.arange(19)
    y = -1.0 + H[1] * np.arange(23)
    X, Y = np.meshgrid(x, y, indexing="ij")
    u1 = np.ascontiguousarray(X**2)
    u2 = np.zeros_like(X)
    T = np.ascontiguousarray(Y.copy())
    z = np.zeros_like(X)
    dt, K = 1e-3, 2.0
    n1, n2, _ = ref.advance(u1, u2, T, z, z, z, K, 1.0, dt, *H)
    # du1/dt = 2 - u1*2x, du2/dt = -K
    assert np.allclose(n1[1:-1, 1:-1], (u1 + dt * (2 - 2 * X**3))[1:-1, 1:-1], atol=1e-12)
    assert np.allclose(n2[1:-1, 1:-1], -K * dt, atol=1e-15)


def test_selected_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
