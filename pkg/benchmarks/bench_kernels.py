#!/usr/bin/env python3
"""Benchmark the compiled speedup kernels against the pure NumPy fallback.

The two hot kernels are the all-pairs oscillation reduction behind empirical
moduli and the smooth-step jet recurrences behind every cutoff evaluation.
Run after `python setup.py build_ext --inplace` (or a regular install with
Cython present); without the extension only the pure timings print.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from parabolab._kernels import pure

try:
    from parabolab._kernels import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pair_oscillations(repeat):
    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(0.0, 1.0, 1500))
    t[0] = 0.0
    v = rng.normal(size=(1500, 2))
    rows = []
    base = timeit(lambda: pure.pair_oscillations(t, v, 1.0), repeat)
    rows.append(("pair_oscillations[1500x2]", "pure", base, 1.0))
    if _speedups is not None:
        fast = timeit(lambda: _speedups.pair_oscillations(t, v, 1.0), repeat)
        rows.append(("pair_oscillations[1500x2]", "speedups", fast, base / fast))
        ga, da = pure.pair_oscillations(t, v, 1.0)
        gb, db = _speedups.pair_oscillations(t, v, 1.0)
        assert np.array_equal(ga, gb) and np.allclose(da, db, rtol=1e-15)
    return rows


def bench_smoothstep_jets(repeat):
    u = np.linspace(-0.1, 1.1, 200_000)
    rows = []
    base = timeit(lambda: pure.smoothstep_jets(u, 4), repeat)
    rows.append(("smoothstep_jets[200k,order4]", "pure", base, 1.0))
    if _speedups is not None:
        fast = timeit(lambda: _speedups.smoothstep_jets(u, 4), repeat)
        rows.append(("smoothstep_jets[200k,order4]", "speedups", fast, base / fast))
        assert np.allclose(pure.smoothstep_jets(u, 4),
                           _speedups.smoothstep_jets(u, 4), rtol=1e-13)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _speedups is None:
        print("compiled kernels not available; timing the pure path only\n")
    rows = bench_pair_oscillations(args.repeat) + bench_smoothstep_jets(args.repeat)
    print(f"{'kernel':<32} {'impl':<10} {'best (ms)':>10} {'speedup':>9}")
    for name, impl, sec, speedup in rows:
        print(f"{name:<32} {impl:<10} {sec * 1e3:>10.2f} {speedup:>8.1f}x")


if __name__ == "__main__":
    main()
