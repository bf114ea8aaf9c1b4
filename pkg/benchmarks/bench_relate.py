#!/usr/bin/env python3
"""Throughput comparison of the relation kernels: numba @njit vs pure numpy.

Usage: python benchmarks/bench_relate.py [--n 1000000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from streetdipole import _kernels


def random_pairs(n, seed=7):
    rng = np.random.default_rng(seed)
    coords = rng.integers(-1000, 1001, size=(n, 8)).astype(np.float64)
    a, b = coords[:, :4], coords[:, 4:]
    ok = ((a[:, 0] != a[:, 2]) | (a[:, 1] != a[:, 3])) & (
        (b[:, 0] != b[:, 2]) | (b[:, 1] != b[:, 3])
    )
    return np.ascontiguousarray(a[ok]), np.ascontiguousarray(b[ok])


def best_of(fn, a, b, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(a, b, 0.0)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    a, b = random_pairs(args.n)
    n = a.shape[0]
    print(f"relating {n} dipole pairs, best of {args.repeat} runs")

    t_numpy = best_of(_kernels.relate_batch_numpy, a, b, args.repeat)
    print(f"numpy : {t_numpy:8.4f} s  ({t_numpy / n * 1e9:7.1f} ns/pair)")

    try:
        _kernels.relate_batch_numba(a[:10], b[:10], 0.0)  # trigger compilation
    except RuntimeError:
        print("numba : unavailable")
        return
    t_numba = best_of(_kernels.relate_batch_numba, a, b, args.repeat)
    print(f"numba : {t_numba:8.4f} s  ({t_numba / n * 1e9:7.1f} ns/pair)")
    print(f"speedup (numpy/numba): {t_numpy / t_numba:.2f}x")

    # scalar reference, extrapolated from a small slice
    from streetdipole.calculus import Dipole, Point, relate

    m = min(20_000, n)
    dipoles_a = [Dipole(Point(r[0], r[1]), Point(r[2], r[3])) for r in a[:m]]
    dipoles_b = [Dipole(Point(r[0], r[1]), Point(r[2], r[3])) for r in b[:m]]
    start = time.perf_counter()
    for da, db in zip(dipoles_a, dipoles_b):
        relate(da, db)
    t_scalar = time.perf_counter() - start
    print(f"scalar: {t_scalar / m * 1e9:7.1f} ns/pair (reference path, {m} samples)")


if __name__ == "__main__":
    main()
