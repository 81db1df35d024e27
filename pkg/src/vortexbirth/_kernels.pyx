# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels. Same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def advance(const double[:, ::1] u1, const double[:, ::1] u2, const double[:, ::1] T,
            const double[:, ::1] f1, const double[:, ::1] f2, const double[:, ::1] q,
            double K, double inv_pr, double dt, double hx, double hy):
    cdef Py_ssize_t nx = u1.shape[0], ny = u1.shape[1], i, j
    cdef double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy)
    cdef double i2hx = 0.5 / hx, i2hy = 0.5 / hy
    cdef double a1, a2, lap1, lap2, lapT, dxu1, dyu1, dxu2, dyu2, dxT, dyT
    out1 = np.array(u1, copy=True)
    out2 = np.array(u2, copy=True)
    outT = np.array(T, copy=True)
    cdef double[:, ::1] n1 = out1, n2 = out2, nT = outT
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            a1 = u1[i, j]
            a2 = u2[i, j]
            lap1 = (u1[i + 1, j] - 2.0 * a1 + u1[i - 1, j]) * ihx2 + (u1[i, j + 1] - 2.0 * a1 + u1[i, j - 1]) * ihy2
            lap2 = (u2[i + 1, j] - 2.0 * a2 + u2[i - 1, j]) * ihx2 + (u2[i, j + 1] - 2.0 * a2 + u2[i, j - 1]) * ihy2
            lapT = (T[i + 1, j] - 2.0 * T[i, j] + T[i - 1, j]) * ihx2 + (T[i, j + 1] - 2.0 * T[i, j] + T[i, j - 1]) * ihy2
            dxu1 = (u1[i + 1, j] - u1[i - 1, j]) * i2hx
            dyu1 = (u1[i, j + 1] - u1[i, j - 1]) * i2hy
            dxu2 = (u2[i + 1, j] - u2[i - 1, j]) * i2hx
            dyu2 = (u2[i, j + 1] - u2[i, j - 1]) * i2hy
            dxT = (T[i + 1, j] - T[i - 1, j]) * i2hx
            dyT = (T[i, j + 1] - T[i, j - 1]) * i2hy
            n1[i, j] = a1 + dt * (lap1 - (a1 * dxu1 + a2 * dyu1) - K * dxT + f1[i, j])
            n2[i, j] = a2 + dt * (lap2 - (a1 * dxu2 + a2 * dyu2) - K * dyT + f2[i, j])
            nT[i, j] = T[i, j] + dt * (inv_pr * lapT - (a1 * dxT + a2 * dyT) + q[i, j])
    return out1, out2, outT


def divergence(const double[:, ::1] u1, const double[:, ::1] u2, double hx, double hy):
    cdef Py_ssize_t nx = u1.shape[0], ny = u1.shape[1], i, j
    cdef double i2hx = 0.5 / hx, i2hy = 0.5 / hy
    out = np.zeros((nx, ny))
    cdef double[:, ::1] d = out
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            d[i, j] = (u1[i + 1, j] - u1[i - 1, j]) * i2hx + (u2[i, j + 1] - u2[i, j - 1]) * i2hy
    return out


cdef inline double _g1(const double[:, ::1] lam, Py_ssize_t i, Py_ssize_t j, Py_ssize_t nx, Py_ssize_t ny, double i2hx) nogil:
    if i <= 0 or i >= nx - 1 or j <= 0 or j >= ny - 1:
        return 0.0
    return (lam[i - 1, j] - lam[i + 1, j]) * i2hx


cdef inline double _g2(const double[:, ::1] lam, Py_ssize_t i, Py_ssize_t j, Py_ssize_t nx, Py_ssize_t ny, double i2hy) nogil:
    if i <= 0 or i >= nx - 1 or j <= 0 or j >= ny - 1:
        return 0.0
    return (lam[i, j - 1] - lam[i, j + 1]) * i2hy


def projection_operator(const double[:, ::1] lam, double hx, double hy):
    cdef Py_ssize_t nx = lam.shape[0], ny = lam.shape[1], i, j
    cdef double i2hx = 0.5 / hx, i2hy = 0.5 / hy
    out = np.zeros((nx, ny))
    cdef double[:, ::1] d = out
    with nogil:
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                d[i, j] = ((_g1(lam, i + 1, j, nx, ny, i2hx) - _g1(lam, i - 1, j, nx, ny, i2hx)) * i2hx
                           + (_g2(lam, i, j + 1, nx, ny, i2hy) - _g2(lam, i, j - 1, nx, ny, i2hy)) * i2hy)
    return out


def correct_velocity(double[:, ::1] u1, double[:, ::1] u2, const double[:, ::1] lam, double hx, double hy):
    cdef Py_ssize_t nx = u1.shape[0], ny = u1.shape[1], i, j
    cdef double i2hx = 0.5 / hx, i2hy = 0.5 / hy
    with nogil:
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                u1[i, j] -= (lam[i - 1, j] - lam[i + 1, j]) * i2hx
                u2[i, j] -= (lam[i, j - 1] - lam[i, j + 1]) * i2hy


def bilinear(const double[:, ::1] f, double x0, double y0, double hx, double hy, xs, ys):
    xa = np.ascontiguousarray(xs, dtype=np.float64)
    ya = np.ascontiguousarray(ys, dtype=np.float64)
    shape = np.broadcast(xa, ya).shape
    xa = np.ascontiguousarray(np.broadcast_to(xa, shape)).ravel()
    ya = np.ascontiguousarray(np.broadcast_to(ya, shape)).ravel()
    cdef const double[::1] X = xa, Y = ya
    cdef Py_ssize_t n = X.shape[0], k, i, j
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef double sx, sy, fx, fy
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            sx = (X[k] - x0) / hx
            sy = (Y[k] - y0) / hy
            i = <Py_ssize_t> floor(sx)
            j = <Py_ssize_t> floor(sy)
            if i < 0:
                i = 0
            elif i > nx - 2:
                i = nx - 2
            if j < 0:
                j = 0
            elif j > ny - 2:
                j = ny - 2
            fx = sx - i
            fy = sy - j
            o[k] = (f[i, j] * (1 - fx) * (1 - fy) + f[i + 1, j] * fx * (1 - fy)
                    + f[i, j + 1] * (1 - fx) * fy + f[i + 1, j + 1] * fx * fy)
    return out.reshape(shape)
