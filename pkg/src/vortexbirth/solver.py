"""Finite-difference integrator for the scaled velocity/temperature system.

Collocated nodes including the boundary, centred second-order differences,
explicit Euler in time. Boundary nodes follow the first-order expansion
``u = psi + t u1``, ``T = T0 + t T1``, which is only meaningful for small t.

Two modes:

``literal``
    integrates the momentum equation as written (no pressure); divergence
    is monitored, not enforced.
``projected``
    after each step removes the discrete interior divergence by a
    least-change projection solved with conjugate gradients.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .fields import eval_scalar
from .model import DimensionlessScenario, Window
from .taylor import FirstOrderField, first_order_coefficient, temperature_rate
from .topology import PlanarField, find_singular_points

log = logging.getLogger(__name__)

MODES = ("literal", "projected")
STABILITY_FACTOR = 0.2
CG_TOL = 1e-8
CG_MAXITER = 20000
BOUNDARY_NOTE = (
    "boundary values come from the first-order expansion in t; "
    "results are meaningful only while t is small"
)


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    def __init__(self, message: str, snapshots=None):
        super().__init__(message)
        self.snapshots = snapshots or []


class DegenerateFieldError(ValueError):
    """Raised when a snapshot velocity is identically zero."""


@dataclass(frozen=True)
class Grid2:
    nx: int
    ny: int
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError(f"grid must be at least 16x16, got {self.nx}x{self.ny}")

    @classmethod
    def square(cls, n: int, window: Window | None = None) -> "Grid2":
        return cls(n, n, window or Window())

    @property
    def hx(self) -> float:
        return self.window.width / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.window.height / (self.ny - 1)

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(self.window.xmin, self.window.xmax, self.nx)

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(self.window.ymin, self.window.ymax, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def stability_bound(self) -> float:
        return STABILITY_FACTOR * min(self.hx, self.hy) ** 2

    def sample(self, e) -> np.ndarray:
        X, Y = self.mesh()
        return np.array(np.broadcast_to(eval_scalar(e, (X, Y)), X.shape), dtype=float)


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid2
    dt: float
    end_time: float
    mode: str = "literal"
    boundary: str = "dirichlet_first_order"
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.boundary != "dirichlet_first_order":
            raise ValueError(f"unsupported boundary condition {self.boundary!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        bound = self.grid.stability_bound()
        if self.dt > bound * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:.3g} exceeds the explicit diffusion bound {bound:.3g}")
        if not self.end_time >= 0:
            raise ValueError("end_time must be nonnegative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")

    @classmethod
    def default(cls, grid: Grid2, end_time: float, mode: str = "literal", snapshot_stride: int = 1,
                dt_fraction: float = 0.5) -> "SolverConfig":
        return cls(grid, dt_fraction * grid.stability_bound(), end_time, mode, snapshot_stride=snapshot_stride)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.end_time / self.dt - 1e-9))


@dataclass
class FieldSnapshot:
    t: float
    u1: np.ndarray
    u2: np.ndarray
    T: np.ndarray
    grid: Grid2
    max_div: float = 0.0

    def __post_init__(self):
        shape = (self.grid.nx, self.grid.ny)
        for name in ("u1", "u2", "T"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        self.max_div = interior_max_divergence(self.u1, self.u2, self.grid)

    def interpolant(self) -> PlanarField:
        g = self.grid
        x0, y0, hx, hy = g.window.xmin, g.window.ymin, g.hx, g.hy
        u1, u2 = np.ascontiguousarray(self.u1), np.ascontiguousarray(self.u2)

        def value(xs, ys):
            return np.stack([kernels.bilinear(u1, x0, y0, hx, hy, xs, ys), kernels.bilinear(u2, x0, y0, hx, hy, xs, ys)])

        return PlanarField(value)


def interior_max_divergence(u1, u2, grid: Grid2) -> float:
    d = kernels.divergence(np.ascontiguousarray(u1), np.ascontiguousarray(u2), grid.hx, grid.hy)
    return float(np.max(np.abs(d[1:-1, 1:-1]))) if d.shape[0] > 2 else 0.0


class _State:
    """Grid samples of the data that stay fixed during a run."""

    def __init__(self, ds: DimensionlessScenario, grid: Grid2):
        self.grid = grid
        u1c = first_order_coefficient(ds)
        self.psi1, self.psi2 = grid.sample(ds.psi.c1), grid.sample(ds.psi.c2)
        self.a1, self.a2 = grid.sample(u1c.c1), grid.sample(u1c.c2)
        self.T0 = grid.sample(ds.T0)
        self.T1 = grid.sample(temperature_rate(ds))
        self.f1, self.f2 = grid.sample(ds.F0.c1), grid.sample(ds.F0.c2)
        self.q = grid.sample(ds.Q)
        self.K, self.invPr = ds.K, ds.invPr
        self.lam = np.zeros((grid.nx, grid.ny))

    def apply_boundary(self, u1, u2, T, t):
        for sl in ((0, slice(None)), (-1, slice(None)), (slice(None), 0), (slice(None), -1)):
            u1[sl] = self.psi1[sl] + t * self.a1[sl]
            u2[sl] = self.psi2[sl] + t * self.a2[sl]
            T[sl] = self.T0[sl] + t * self.T1[sl]


def initial_snapshot(ds: DimensionlessScenario, grid: Grid2) -> FieldSnapshot:
    return FieldSnapshot(0.0, grid.sample(ds.psi.c1), grid.sample(ds.psi.c2), grid.sample(ds.T0), grid)


def project(u1, u2, grid: Grid2, lam0=None, tol: float = CG_TOL, maxiter: int = CG_MAXITER):
    """Remove interior divergence in place; returns the multiplier.

    Solves ``D D^T lam = D u`` by conjugate gradients (lam vanishes on the
    boundary, boundary velocities are untouched) and sets ``u -= D^T lam``.
    Iteration stops once the max-norm of the remaining divergence is below
    ``tol``.
    """
    hx, hy = grid.hx, grid.hy
    b = kernels.divergence(u1, u2, hx, hy)
    lam = np.zeros_like(b) if lam0 is None else lam0.copy()
    r = b - kernels.projection_operator(lam, hx, hy)
    if np.max(np.abs(r)) <= tol:
        kernels.correct_velocity(u1, u2, lam, hx, hy)
        return lam
    p = r.copy()
    rr = float(np.vdot(r, r))
    for it in range(maxiter):
        Ap = kernels.projection_operator(p, hx, hy)
        alpha = rr / float(np.vdot(p, Ap))
        lam += alpha * p
        r -= alpha * Ap
        if np.max(np.abs(r)) <= tol:
            break
        rr_new = float(np.vdot(r, r))
        p *= rr_new / rr
        p += r
        rr = rr_new
    else:
        raise SolverError(f"projection did not converge in {maxiter} iterations")
    kernels.correct_velocity(u1, u2, lam, hx, hy)
    return lam


def step(s: FieldSnapshot, ds: DimensionlessScenario, cfg: SolverConfig, state: _State | None = None) -> FieldSnapshot:
    """Advance one ``cfg.dt``."""
    g = cfg.grid
    state = state or _State(ds, g)
    u1, u2, T = kernels.advance(
        np.ascontiguousarray(s.u1), np.ascontiguousarray(s.u2), np.ascontiguousarray(s.T),
        state.f1, state.f2, state.q, state.K, state.invPr, cfg.dt, g.hx, g.hy,
    )
    t = s.t + cfg.dt
    state.apply_boundary(u1, u2, T, t)
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2)) and np.all(np.isfinite(T))):
        raise BlowUpError(f"non-finite values at t={t:.6g}")
    if cfg.mode == "projected":
        state.lam = project(u1, u2, g, state.lam)
    return FieldSnapshot(t, u1, u2, T, g)


def run(ds: DimensionlessScenario, cfg: SolverConfig) -> list[FieldSnapshot]:
    g = cfg.grid
    state = _State(ds, g)
    s = initial_snapshot(ds, g)
    if cfg.mode == "projected":
        u1, u2 = s.u1.copy(), s.u2.copy()
        state.lam = project(u1, u2, g)
        s = FieldSnapshot(0.0, u1, u2, s.T, g)
    snaps = [s]
    n = cfg.n_steps
    for k in range(1, n + 1):
        try:
            s = step(s, ds, cfg, state)
        except BlowUpError as exc:
            raise BlowUpError(f"step {k}: {exc}", snaps) from None
        # times are k*dt exactly, not accumulated sums
        s.t = k * cfg.dt
        if k % cfg.snapshot_stride == 0 or k == n:
            snaps.append(s)
    return snaps


def stagnation_points(s: FieldSnapshot, subwindow: Window, seed_density: int = 32) -> list[tuple[float, float]]:
    w = s.grid.window
    h = (s.grid.hx, s.grid.hy)
    if (subwindow.xmin < w.xmin + h[0] or subwindow.xmax > w.xmax - h[0]
            or subwindow.ymin < w.ymin + h[1] or subwindow.ymax > w.ymax - h[1]):
        raise ValueError("subwindow must lie inside the grid interior")
    if not (np.any(s.u1) or np.any(s.u2)):
        raise DegenerateFieldError("identically-zero field")
    return find_singular_points(s.interpolant(), subwindow, seed_density)


def stagnation_count(s: FieldSnapshot, subwindow: Window, seed_density: int = 32) -> int:
    return len(stagnation_points(s, subwindow, seed_density))


def taylor_consistency(snapshots: list[FieldSnapshot], fof: FirstOrderField) -> list[tuple[float, float]]:
    """``(t, max interior |u_num - (psi + t u1)| / t**2)`` per snapshot."""
    if not snapshots:
        return []
    g = snapshots[0].grid
    X, Y = g.mesh()
    psi = np.stack([np.broadcast_to(eval_scalar(c, (X, Y)), X.shape) for c in fof.psi])
    a = np.stack([np.broadcast_to(eval_scalar(c, (X, Y)), X.shape) for c in fof.u1])
    out = []
    for s in snapshots:
        if s.t == 0:
            out.append((0.0, 0.0))
            continue
        pred = psi + s.t * a
        err = max(
            float(np.max(np.abs(s.u1[1:-1, 1:-1] - pred[0, 1:-1, 1:-1]))),
            float(np.max(np.abs(s.u2[1:-1, 1:-1] - pred[1, 1:-1, 1:-1]))),
        )
        out.append((s.t, err / s.t**2))
    return out


def first_transition_time(snapshots: list[FieldSnapshot], subwindow: Window, threshold: int = 2,
                          seed_density: int = 32) -> tuple[float | None, list[tuple[float, int]]]:
    """First snapshot time whose stagnation count reaches ``threshold``, plus the whole timeline."""
    timeline = []
    first = None
    for s in snapshots:
        try:
            c = stagnation_count(s, subwindow, seed_density)
        except DegenerateFieldError:
            c = -1
        timeline.append((s.t, c))
        if first is None and c >= threshold:
            first = s.t
    return first, timeline


# Output


def write_snapshot_csv(s: FieldSnapshot, path: Path) -> None:
    X, Y = s.grid.mesh()
    rows = np.column_stack([np.full(X.size, s.t), X.ravel(), Y.ravel(), s.u1.ravel(), s.u2.ravel(), s.T.ravel()])
    np.savetxt(path, rows, delimiter=",", header="t,x1,x2,u1,u2,T", comments="", fmt="%.17g")


def read_snapshot_csv(path: Path, grid: Grid2) -> FieldSnapshot:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    shape = (grid.nx, grid.ny)
    return FieldSnapshot(float(data[0, 0]), data[:, 3].reshape(shape), data[:, 4].reshape(shape),
                         data[:, 5].reshape(shape), grid)


def write_snapshots(snapshots: list[FieldSnapshot], outdir: Path, cfg: SolverConfig) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, s in enumerate(snapshots):
        name = f"snapshot_{k:05d}.csv"
        write_snapshot_csv(s, outdir / name)
        entries.append({"file": name, "t": s.t, "max_div": s.max_div})
    g = cfg.grid
    index = {
        "grid": {"nx": g.nx, "ny": g.ny, "window": list(g.window.as_tuple())},
        "mode": cfg.mode,
        "dt": cfg.dt,
        "end_time": cfg.end_time,
        "boundary": cfg.boundary,
        "boundary_note": BOUNDARY_NOTE,
        "backend": kernels.BACKEND,
        "snapshots": entries,
    }
    (outdir / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True))
    return index
