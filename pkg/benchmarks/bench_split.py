#!/usr/bin/env python3
"""Benchmark the compiled split kernel against the pure-numpy fallback.

Both kernels are imported directly (bypassing the import-time selection), so
one run compares them on identical inputs and verifies they agree bit for
bit.  The end-to-end section times gbdt.train with whichever backend is
active; run with APPKEEP_FORCE_PURE=1 to time the fallback.

Usage: python benchmarks/bench_split.py [--rows 4000] [--cols 40] [--repeat 5]
"""

import argparse
import time

import numpy as np

from appkeep.gbdt import BACKEND, TrainParams, train
from appkeep.gbdt import _scan_py

try:
    from appkeep.gbdt import _scan as _scan_c
except ImportError:
    _scan_c = None


def presorted_columns(rows: int, cols: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    X[:, ::3] = (X[:, ::3] > 0.3).astype(float)  # mix in binary columns
    margins = rng.normal(scale=0.5, size=rows)
    y = rng.integers(0, 2, size=rows)
    p = 1.0 / (1.0 + np.exp(-margins))
    g = p - y
    h = p * (1.0 - p)
    out = []
    for f in range(cols):
        order = np.lexsort((h, g, X[:, f]))
        out.append(
            (
                np.ascontiguousarray(X[order, f]),
                np.ascontiguousarray(g[order]),
                np.ascontiguousarray(h[order]),
            )
        )
    return out


def time_kernel(scan, columns, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for vals, g, h in columns:
            scan(vals, g, h, 1.0, 0.0, 1.0)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--cols", type=int, default=40)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    columns = presorted_columns(args.rows, args.cols, seed=0)

    t_py = time_kernel(_scan_py.scan_column, columns, args.repeat)
    print(f"pure-numpy kernel : {t_py * 1e3:8.2f} ms / {args.cols} columns of {args.rows} rows")
    if _scan_c is not None:
        t_c = time_kernel(_scan_c.scan_column, columns, args.repeat)
        print(f"compiled kernel   : {t_c * 1e3:8.2f} ms / {args.cols} columns of {args.rows} rows")
        print(f"speedup           : {t_py / t_c:8.2f}x")
        mismatches = sum(
            _scan_c.scan_column(v, g, h, 1.0, 0.0, 1.0) != _scan_py.scan_column(v, g, h, 1.0, 0.0, 1.0)
            for v, g, h in columns
        )
        print(f"bit-identical     : {'yes' if mismatches == 0 else f'NO ({mismatches} columns differ)'}")
    else:
        print("compiled kernel   : not built")

    rng = np.random.default_rng(1)
    X = rng.normal(size=(2000, 30))
    y = (X[:, 0] + 0.5 * rng.normal(size=2000) > 0).astype(float)
    t0 = time.perf_counter()
    train(X, y, TrainParams(n_trees=64, max_depth=3))
    dt = time.perf_counter() - t0
    print(f"train 64x depth-3 : {dt * 1e3:8.2f} ms  (active backend: {BACKEND})")


if __name__ == "__main__":
    main()
