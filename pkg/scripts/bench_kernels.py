#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

The solvers spend most of their time in small Hermitian eigensolves,
Cholesky log-determinants and the joint feasibility projection; this script
times those primitives on representative sizes for both backends and prints
a speedup table.

Usage: python scripts/bench_kernels.py [--repeats 20000]
"""

import argparse
import time

import numpy as np

from secgame import kernels


def crandn(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def bench(fn, args_list, repeats):
    # warm up, then time `repeats` calls round-robin over the inputs
    for args in args_list[:10]:
        fn(*args)
    t0 = time.perf_counter()
    for i in range(repeats):
        fn(*args_list[i % len(args_list)])
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20000)
    args = parser.parse_args()

    try:
        kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not available; build the extension first")
        return 1

    rng = np.random.default_rng(0)
    rows = []
    for n in (2, 3, 5, 8):
        herm = [kernels.hermitize(crandn(rng, n)) for _ in range(64)]
        pd = [kernels.hermitize(c @ c.conj().T + 0.2 * np.eye(n))
              for c in (crandn(rng, n) for _ in range(64))]
        pairs = [(h, kernels.hermitize(crandn(rng, n)), 1.0) for h in herm]
        cases = [
            (f"eigh {n}x{n}", kernels.eigh, [(m,) for m in herm]),
            (f"logdet {n}x{n}", kernels.logdet, [(m,) for m in pd]),
            (f"project_feasible {n}x{n}", kernels.project_feasible, pairs),
        ]
        for name, fn, arg_list in cases:
            t_py = bench(lambda *a: fn(*a, backend="python"), arg_list, args.repeats)
            t_cy = bench(lambda *a: fn(*a, backend="compiled"), arg_list, args.repeats)
            rows.append((name, t_py * 1e6, t_cy * 1e6, t_py / t_cy))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'python us':>10}  {'compiled us':>11}  {'speedup':>7}")
    for name, t_py, t_cy, speedup in rows:
        print(f"{name:<{width}}  {t_py:>10.2f}  {t_cy:>11.2f}  {speedup:>6.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
