#!/usr/bin/env python3
"""Benchmark the compiled SMO kernel against the pure-Python fallback.

Builds RBF training problems of increasing size (blob data mimicking the
grasp-feature scale), runs both kernels on identical Gram matrices, verifies
the results are bit-identical, and reports wall-clock times.

    python3 benchmarks/bench_smo.py [--sizes 60,120,240,480] [--repeats 3]
"""

import argparse
import time

import numpy as np

from emgds import _smo_py
from emgds.svm import KernelSpec, gram

try:
    from emgds import _smo as _smo_ext
except ImportError:
    _smo_ext = None


def make_problem(n, seed):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.vstack([
        rng.normal(size=(half, 10)) * 0.8 - 0.9,
        rng.normal(size=(n - half, 10)) * 0.8 + 0.9,
    ])
    y = np.r_[np.full(half, -1.0), np.full(n - half, 1.0)]
    spec = KernelSpec("rbf").resolved(x)
    return gram(spec, x, x), y


def run(kernel, K, y, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = kernel(K, y, 1.0, 1e-3, 200, 42)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="60,120,240,480")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _smo_ext is None:
        print("compiled backend (emgds._smo) is not built; nothing to compare")
        return 1

    print(f"{'n':>6} {'python (s)':>12} {'cython (s)':>12} {'speedup':>9}  identical")
    for n in sizes:
        K, y = make_problem(n, seed=n)
        t_py, (a_py, b_py, p_py, _) = run(
            lambda K, y, c, tol, mp, sd: _smo_py.optimize(K, y, c, tol, mp, sd),
            K, y, args.repeats)
        t_cy, (a_cy, b_cy, p_cy) = run(
            lambda K, y, c, tol, mp, sd: _smo_ext.optimize(K, y, c, tol, mp, sd),
            K, y, args.repeats)
        same = bool(np.array_equal(a_py, a_cy) and b_py == b_cy and p_py == p_cy)
        print(f"{n:>6} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}x  {same}")
        if not same:
            print("  WARNING: backends disagree; investigate before trusting results")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
