"""Benchmark the compiled convolution kernels against the numpy fallback.

Shapes mirror the detector workloads: single-channel cubic inputs for
n = 5..9, eight output channels, kernel 3, batch 32.

Run:  python benchmarks/benchmark_kernels.py [--repeat 20]
"""

import argparse
import importlib
import os
import time

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np

from pcmanip.kernels import reference

try:
    _native = importlib.import_module("pcmanip.kernels._native")
except ImportError:
    _native = None


def _timeit(fn, repeat):
    fn()  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n: int, repeat: int, batch: int = 32, channels: int = 8, kernel: int = 3):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, 1, n, n, n)).astype(np.float32)
    w = rng.standard_normal((channels, 1, kernel, kernel, kernel)).astype(np.float32)
    b = rng.standard_normal(channels).astype(np.float32)
    gout = rng.standard_normal(
        (batch, channels, n - kernel + 1, n - kernel + 1, n - kernel + 1)
    ).astype(np.float32)

    rows = []
    backends = [("reference", reference)]
    if _native is not None:
        backends.append(("native", _native))
    for name, impl in backends:
        fwd = _timeit(lambda: impl.conv3d_forward(x, w, b), repeat)
        gin = _timeit(lambda: impl.conv3d_grad_input(gout, w), repeat)
        gpar = _timeit(lambda: impl.conv3d_grad_params(x, gout), repeat)
        rows.append((name, fwd, gin, gpar))

    if _native is not None:
        ref = reference.conv3d_forward(x, w, b)
        nat = np.asarray(_native.conv3d_forward(x, w, b))
        agree = np.max(np.abs(ref - nat))
        print(f"n={n}: max |reference - native| forward = {agree:.3e}")
    for name, fwd, gin, gpar in rows:
        print(
            f"n={n} {name:>9}: forward {fwd * 1e6:8.1f} us   "
            f"grad_input {gin * 1e6:8.1f} us   grad_params {gpar * 1e6:8.1f} us"
        )
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _native is None:
        print("compiled extension not available; benchmarking the fallback only")
    for n in (5, 7, 9):
        rows = bench(n, args.repeat)
        if len(rows) == 2:
            speedup = rows[0][1] / rows[1][1]
            print(f"n={n}: native forward speedup vs reference: {speedup:.2f}x")
        print()


if __name__ == "__main__":
    main()
