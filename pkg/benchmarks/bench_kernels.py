"""Compare the compiled and numpy histogram kernels, alone and inside a short training run.

    python3 benchmarks/bench_kernels.py [--rows 100000] [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mcgam import _kernels

TRAIN_SNIPPET = """
import time
from mcgam import _kernels
from mcgam.boosting import TrainConfig, train
from mcgam.data import build_bins, split
from mcgam.synthetic import make_dataset
tr, va, _ = split(make_dataset({rows}, seed=0), (0.8, 0.1, 0.1), seed=0)
bins = build_bins(tr, 256)
tr, va = tr.with_bins(bins), va.with_bins(bins)
t0 = time.perf_counter()
train(tr, va, TrainConfig(bags=10, max_iters={iters}))
print(_kernels.BACKEND, time.perf_counter() - t0)
"""


def time_histogram(backend, bins, resid, sample, n_bins, repeat):
    _kernels.bag_histogram(bins, resid, sample, n_bins, backend=backend)  # warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        _kernels.bag_histogram(bins, resid, sample, n_bins, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def time_training(pure, rows, iters):
    env = dict(os.environ, MCGAM_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET.format(rows=rows, iters=iters)],
                         env=env, capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--train-rows", type=int, default=10_000)
    ap.add_argument("--train-iters", type=int, default=30)
    args = ap.parse_args()

    if not _kernels.compiled_available():
        print("compiled extension not built; only the numpy kernel is available")
    rng = np.random.default_rng(0)
    print(f"{'K':>3} {'bins':>5} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for K in (3, 7):
        for n_bins in (32, 256):
            bins = rng.integers(0, n_bins, size=args.rows)
            resid = rng.normal(size=(args.rows, K))
            sample = rng.integers(0, args.rows, size=args.rows)
            py = time_histogram("python", bins, resid, sample, n_bins, args.repeat)
            if _kernels.compiled_available():
                cy = time_histogram(None, bins, resid, sample, n_bins, args.repeat)
                print(f"{K:>3} {n_bins:>5} {py * 1e3:>10.2f} {cy * 1e3:>10.2f} {py / cy:>7.1f}x")
            else:
                print(f"{K:>3} {n_bins:>5} {py * 1e3:>10.2f} {'-':>10} {'-':>8}")

    print(f"\ntraining {args.train_rows} rows, B=10, M={args.train_iters}:")
    for pure in (True, False):
        backend, secs = time_training(pure, args.train_rows, args.train_iters)
        print(f"  {backend:<7} {secs:.2f}s")


if __name__ == "__main__":
    main()
