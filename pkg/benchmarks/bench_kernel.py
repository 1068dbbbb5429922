#!/usr/bin/env python3
"""Benchmark: compiled simulation kernel vs the pure-Python fallback.

Runs the same seeded workload through both implementations and reports
runs/second plus the speedup.  Results are bit-identical by construction
(see tests/test_parity.py); this script only measures throughput.

Usage: python benchmarks/bench_kernel.py [--runs N] [--blocks N]
"""

import argparse
import time

from forksim import kernel
from forksim.defense import Policy
from forksim.runner import RunConfig, simulate_run_python


def bench(fn, configs):
    start = time.perf_counter()
    for config in configs:
        fn(config)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=60, help="runs per policy")
    parser.add_argument("--blocks", type=int, default=1000)
    args = parser.parse_args()

    policies = [Policy.NONE, Policy.UNIFORM, Policy.SDTLA, Policy.WVBM]
    configs = [
        RunConfig(policy=p, alpha=0.2 + 0.05 * (i % 6), blocks=args.blocks, seed=i)
        for p in policies
        for i in range(args.runs)
    ]
    n = len(configs)

    py_time = bench(simulate_run_python, configs)
    print(f"pure python : {n} runs x {args.blocks} blocks in {py_time:6.2f}s "
          f"({n / py_time:7.1f} runs/s)")

    if not kernel.compiled_available():
        print("compiled kernel not built; skipping comparison")
        return

    native = kernel._speedups.simulate_run_native
    nat_time = bench(native, configs)
    print(f"compiled    : {n} runs x {args.blocks} blocks in {nat_time:6.2f}s "
          f"({n / nat_time:7.1f} runs/s)")
    print(f"speedup     : {py_time / nat_time:.1f}x")


if __name__ == "__main__":
    main()
