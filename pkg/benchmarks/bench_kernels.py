"""Compare the compiled and numpy stencil kernels on the solver's hot loops.

    python benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from vortexbirth import _kernels_py as numpy_backend

try:
    from vortexbirth import _kernels as cython_backend
except ImportError:
    cython_backend = None


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    arrs = [np.ascontiguousarray(rng.standard_normal((n, n))) for _ in range(6)]
    lam = rng.standard_normal((n, n))
    lam[0, :] = lam[-1, :] = lam[:, 0] = lam[:, -1] = 0
    return arrs, np.ascontiguousarray(lam)


def _cases(mod, n):
    (u1, u2, T, f1, f2, q), lam = _inputs(n)
    h = 4.0 / (n - 1)
    xs = np.random.default_rng(1).uniform(-2, 2, 4096)
    ys = np.random.default_rng(2).uniform(-2, 2, 4096)
    return {
        "advance": lambda: mod.advance(u1, u2, T, f1, f2, q, 100.0, 1.0, 1e-5, h, h),
        "divergence": lambda: mod.divergence(u1, u2, h, h),
        "projection_operator": lambda: mod.projection_operator(lam, h, h),
        "bilinear(4096 pts)": lambda: mod.bilinear(u1, -2.0, -2.0, h, h, xs, ys),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)
    if cython_backend is None:
        print("compiled extension not built; only the numpy backend is timed")
    print(f"{'kernel':<22}{'n':>6}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for n in args.sizes:
        py = _cases(numpy_backend, n)
        cy = _cases(cython_backend, n) if cython_backend else {}
        for name, fn in py.items():
            t_py = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            if name in cy:
                t_cy = min(timeit.repeat(cy[name], number=1, repeat=args.repeat)) * 1e3
                print(f"{name:<22}{n:>6}{t_py:>12.3f}{t_cy:>12.3f}{t_py / t_cy:>9.1f}x")
            else:
                print(f"{name:<22}{n:>6}{t_py:>12.3f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
