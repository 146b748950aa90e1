"""Compare the compiled and pure-Python busy-period scan kernels.

Usage: python benchmarks/bench_scan.py [--arrivals N] [--repeat R]
"""

import argparse
import time

import numpy as np

from busyvar import _kernels
from busyvar.sim import SimConfig, simulate_busy_periods
from busyvar.dist import Exponential


def time_kernel(fn, gaps, services, repeat):
    out = np.empty(gaps.size)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(gaps, services, out, 0, gaps.size, 0.0, 0.0, False)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--arrivals", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    gaps = rng.exponential(1.0, args.arrivals)
    services = rng.exponential(1.0, args.arrivals)
    py = time_kernel(_kernels.python_scan, gaps, services, args.repeat)
    print(f"arrivals={args.arrivals} rho=1")
    print(f"python   {py * 1e3:9.2f} ms  {args.arrivals / py / 1e6:8.2f} M arrivals/s")
    if _kernels.compiled_scan is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return
    cy = time_kernel(_kernels.compiled_scan, gaps, services, args.repeat)
    print(f"cython   {cy * 1e3:9.2f} ms  {args.arrivals / cy / 1e6:8.2f} M arrivals/s")
    print(f"speedup  {py / cy:9.1f}x")

    cfg = SimConfig(1.0, Exponential(1.0), 1_000_000, seed=1)
    t0 = time.perf_counter()
    simulate_busy_periods(cfg)
    print(f"end-to-end 1e6 busy periods ({_kernels.BACKEND}): {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
