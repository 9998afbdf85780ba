#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against the pure-numpy fallback.

Times the three hot operations of the training loop (single-state forward,
batch forward, fused train step) on the production network shape. Run:

    python3 benchmarks/bench_kernels.py [--batch 50] [--repeats 2000]
"""

import argparse
import time

import numpy as np

from ephemsim.qnet import kernels_numpy
from ephemsim.qnet.network import QNetwork, TrainingConfig

try:
    from ephemsim.qnet import kernels_numba
except ImportError:
    kernels_numba = None


def bench(fn, repeats):
    fn()  # warm-up (and JIT compile)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--batch", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    net = QNetwork(seed=0)
    cfg = TrainingConfig()
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, 6)
    xs = rng.uniform(0, 1, (args.batch, 6))
    targets = np.zeros((args.batch, 5))
    taken = rng.integers(0, 5, args.batch).astype(np.int64)

    backends = [("numpy", kernels_numpy)]
    if kernels_numba is not None:
        backends.append(("numba", kernels_numba))
    else:
        print("numba not importable; benchmarking the numpy path only")

    cases = {
        "forward_single": lambda k: (lambda: k.forward_single(*net.params, x)),
        "forward_batch": lambda k: (lambda: k.forward_batch(*net.params, xs)),
        "train_step": lambda k: (lambda: k.train_step(*net.params, xs, targets, taken, cfg.learning_rate)),
    }

    results = {}
    for name, kernels in backends:
        for case, make in cases.items():
            results[(name, case)] = bench(make(kernels), args.repeats)

    print(f"{'operation':16s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "      speedup")
    for case in cases:
        row = [results[(name, case)] for name, _ in backends]
        speed = row[0] / row[-1] if len(row) > 1 else float("nan")
        cells = " ".join(f"{v * 1e6:9.2f} us" for v in row)
        print(f"{case:16s} {cells}   {speed:8.2f}x")


if __name__ == "__main__":
    main()
