#!/usr/bin/env python3
"""Benchmark the compiled scalar-regime kernel against the pure-Python fallback.

Both backends must produce bit-identical results; this script verifies that on
a shared run before timing each one. The compiled path is what makes the
10^7-step acceptance sweeps practical.

Usage:
    python3 benchmarks/bench_sim1d.py [--steps N]
"""

import argparse
import time

from eco.simulate1d import HAVE_COMPILED, simulate_second_moment

PARAMS = dict(L=1.0, eta=0.1, beta=0.5, delta=0.346, burn_in=0, seed=7)


def run(regime, steps, force_python):
    t0 = time.perf_counter()
    res = simulate_second_moment(regime, steps=steps, force_python=force_python, **PARAMS)
    return res, time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2_000_000)
    args = parser.parse_args()

    if not HAVE_COMPILED:
        print("compiled kernel not available; only the fallback will run")

    print(f"{'regime':<8} {'backend':<10} {'steps':>10} {'seconds':>9} {'Msteps/s':>9}")
    for regime in ("mw", "naive", "eco"):
        check = {}
        for force_python in (False, True):
            if force_python is False and not HAVE_COMPILED:
                continue
            res, dt = run(regime, args.steps, force_python)
            check[res.backend] = res
            rate = args.steps / dt / 1e6
            print(f"{regime:<8} {res.backend:<10} {args.steps:>10} {dt:>9.3f} {rate:>9.1f}")
        if len(check) == 2:
            a, b = check["compiled"], check["python"]
            identical = (a.mean_sq == b.mean_sq and a.final_x == b.final_x
                         and a.final_m == b.final_m)
            print(f"{'':8} bit-identical: {identical}")
            if not identical:
                raise SystemExit(f"backend mismatch for {regime}: {a} vs {b}")


if __name__ == "__main__":
    main()
