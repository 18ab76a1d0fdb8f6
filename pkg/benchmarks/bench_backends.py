#!/usr/bin/env python3
"""Compare the compiled and pure-NumPy Langevin kernels.

Runs the same step blocks through every available backend and prints a table
of wall-clock times and throughput.  The two backends compute the same
recursion (agreeing to rounding), so this is purely a speed comparison.

Usage:
    python3 benchmarks/bench_backends.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

from gmlangevin import backend

CASES = [
    # (batch, dim, components)
    (64, 10, 3),
    (200, 100, 3),
    (1000, 100, 3),
    (200, 100, 10),
]


def make_inputs(B, D, K, S, seed=0):
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=1.0, size=(K, D))
    variances = np.concatenate([[3.0], np.ones(K - 1)])
    w = np.full(K, 1.0 / K)
    logw = np.tile(np.log(w), (B, 1))
    sigmas = np.geomspace(1.0, 0.01, S)
    epses = 2e-5 * sigmas**2 / sigmas[-1] ** 2
    noise = rng.standard_normal((B, S, D))
    states = rng.standard_normal((B, D))
    return states, logw, means, variances, sigmas, epses, noise


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200, help="steps per block")
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions (best taken)")
    args = ap.parse_args()

    names = backend.available()
    print(f"backends: {', '.join(names)}   (active default: {backend.active_name()})")
    header = f"{'batch':>6} {'dim':>5} {'K':>3} {'steps':>6} | " + " | ".join(
        f"{n:>12}" for n in names
    )
    if len(names) > 1:
        header += " | speedup"
    print(header)
    print("-" * len(header))

    for B, D, K in CASES:
        s0, *rest = make_inputs(B, D, K, args.steps)
        times = {}
        for name in names:
            k = backend.kernel(name)
            st = s0.copy()
            k(st, *rest)  # warm up
            best = float("inf")
            for _ in range(args.repeat):
                st = s0.copy()
                t0 = time.perf_counter()
                k(st, *rest)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
        row = f"{B:>6} {D:>5} {K:>3} {args.steps:>6} | " + " | ".join(
            f"{times[n] * 1e3:>9.1f} ms" for n in names
        )
        if len(names) > 1:
            row += f" | {times['numpy'] / times['cython']:>6.2f}x"
        print(row)
        rate = args.steps * B / min(times.values()) / 1e6
        print(f"{'':>24} best throughput: {rate:.2f} M chain-steps/s")


if __name__ == "__main__":
    main()
