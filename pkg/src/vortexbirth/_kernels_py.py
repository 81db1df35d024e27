"""Pure numpy stencil kernels; reference implementation of the compiled ones.

Arrays are node-indexed ``[i, j]`` with ``i`` along x1 and ``j`` along x2.
Only interior nodes are updated; boundary rows and columns pass through.
"""

import numpy as np


def advance(u1, u2, T, f1, f2, q, K, inv_pr, dt, hx, hy):
    """One explicit Euler step of the scaled momentum and heat equations."""
    ihx2, ihy2 = 1.0 / (hx * hx), 1.0 / (hy * hy)
    i2hx, i2hy = 0.5 / hx, 0.5 / hy

    def lap(f):
        c = f[1:-1, 1:-1]
        return (f[2:, 1:-1] - 2.0 * c + f[:-2, 1:-1]) * ihx2 + (f[1:-1, 2:] - 2.0 * c + f[1:-1, :-2]) * ihy2

    def ddx(f):
        return (f[2:, 1:-1] - f[:-2, 1:-1]) * i2hx

    def ddy(f):
        return (f[1:-1, 2:] - f[1:-1, :-2]) * i2hy

    a1, a2 = u1[1:-1, 1:-1], u2[1:-1, 1:-1]
    # overflow is reported by the caller's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        du1 = lap(u1) - (a1 * ddx(u1) + a2 * ddy(u1)) - K * ddx(T) + f1[1:-1, 1:-1]
        du2 = lap(u2) - (a1 * ddx(u2) + a2 * ddy(u2)) - K * ddy(T) + f2[1:-1, 1:-1]
        dT = inv_pr * lap(T) - (a1 * ddx(T) + a2 * ddy(T)) + q[1:-1, 1:-1]

    n1, n2, nT = u1.copy(), u2.copy(), T.copy()
    n1[1:-1, 1:-1] += dt * du1
    n2[1:-1, 1:-1] += dt * du2
    nT[1:-1, 1:-1] += dt * dT
    return n1, n2, nT


def divergence(u1, u2, hx, hy):
    d = np.zeros_like(u1)
    d[1:-1, 1:-1] = (u1[2:, 1:-1] - u1[:-2, 1:-1]) * (0.5 / hx) + (u2[1:-1, 2:] - u2[1:-1, :-2]) * (0.5 / hy)
    return d


def _adjoint(lam, hx, hy):
    """Transpose of the interior divergence, masked to interior velocity nodes."""
    g1 = np.zeros_like(lam)
    g2 = np.zeros_like(lam)
    g1[1:-1, 1:-1] = (lam[:-2, 1:-1] - lam[2:, 1:-1]) * (0.5 / hx)
    g2[1:-1, 1:-1] = (lam[1:-1, :-2] - lam[1:-1, 2:]) * (0.5 / hy)
    return g1, g2


def projection_operator(lam, hx, hy):
    """A lam = D (D^T lam) with lam zero on the boundary."""
    g1, g2 = _adjoint(lam, hx, hy)
    return divergence(g1, g2, hx, hy)


def correct_velocity(u1, u2, lam, hx, hy):
    """u <- u - D^T lam on interior nodes (in place)."""
    g1, g2 = _adjoint(lam, hx, hy)
    u1 -= g1
    u2 -= g2


def bilinear(f, x0, y0, hx, hy, xs, ys):
    """Bilinear interpolation of node values ``f`` at points (xs, ys)."""
    nx, ny = f.shape
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sx = (xs - x0) / hx
    sy = (ys - y0) / hy
    i = np.clip(np.floor(sx).astype(np.intp), 0, nx - 2)
    j = np.clip(np.floor(sy).astype(np.intp), 0, ny - 2)
    fx = sx - i
    fy = sy - j
    return (
        f[i, j] * (1 - fx) * (1 - fy)
        + f[i + 1, j] * fx * (1 - fy)
        + f[i, j + 1] * (1 - fx) * fy
        + f[i + 1, j + 1] * fx * fy
    )
