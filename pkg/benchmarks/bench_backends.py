#!/usr/bin/env python3
"""Benchmark the numba tree-growing kernel against the pure-numpy fallback.

Grows the same bagged trees with both backends on synthetic regression data,
verifies the outputs are bit-identical, and reports wall times. Optionally
(--pipeline) also times the full `train` command end to end in subprocesses,
selecting the backend through the E2CREDIT_DISABLE_NUMBA environment flag.

Usage:
    python benchmarks/bench_backends.py [--rows 4000] [--trees 10] [--pipeline]
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from e2credit import _kernels
from e2credit.forest import _draw_bootstrap, _tree_rng


def make_data(rows: int, features: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    y = (
        2.5 * X[:, 0]
        + np.sin(X[:, 1])
        + 0.5 * X[:, 2] * X[:, 0]
        + 0.3 * rng.normal(size=rows)
    )
    return np.ascontiguousarray(X), np.ascontiguousarray(y)


def grow_forest(X, y, trees: int, m: int, depth: int, backend: str):
    out = []
    n = X.shape[0]
    for b in range(trees):
        rng = _tree_rng(0, b)
        boot = _draw_bootstrap(rng, n)
        out.append(
            _kernels.build_tree_arrays(X, y, boot, m, depth, rng, backend=backend)
        )
    return out


def bench_kernels(args) -> None:
    X, y = make_data(args.rows, args.features)
    print(
        f"kernel benchmark: {args.rows} rows x {args.features} features, "
        f"{args.trees} trees, m={args.m}, depth={args.depth}"
    )
    backends = ["numpy"]
    if _kernels.NUMBA_AVAILABLE:
        grow_forest(X[:200], y[:200], 1, args.m, 3, "numba")  # JIT warm-up
        backends.insert(0, "numba")
    else:
        print("numba not importable; timing the fallback only")
    results = {}
    timings = {}
    for backend in backends:
        start = time.perf_counter()
        results[backend] = grow_forest(X, y, args.trees, args.m, args.depth, backend)
        timings[backend] = time.perf_counter() - start
        print(
            f"  {backend:>6}: {timings[backend]:8.3f} s "
            f"({args.trees / timings[backend]:6.2f} trees/s)"
        )
    if len(backends) == 2:
        identical = all(
            np.array_equal(ta[key], tb[key])
            for ta, tb in zip(results["numba"], results["numpy"])
            for key in ta
        )
        print(f"  outputs bit-identical: {identical}")
        print(f"  speedup numba vs numpy: {timings['numpy'] / timings['numba']:.1f}x")
        if not identical:
            raise SystemExit("backend outputs diverged")


def bench_pipeline(args) -> None:
    print("\nfull-pipeline benchmark (train command, subprocess per backend)")
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        synth_dir = tmp_path / "synth"
        subprocess.run(
            [sys.executable, "-m", "e2credit.cli", "synth", "--firms", "60",
             "--dates", "40", "--seed", "0", "--out-dir", str(synth_dir)],
            check=True, capture_output=True,
        )
        for backend, disable in (("numba", "0"), ("numpy", "1")):
            if backend == "numba" and not _kernels.NUMBA_AVAILABLE:
                continue
            env = dict(os.environ, E2CREDIT_DISABLE_NUMBA=disable)
            out_dir = tmp_path / f"train_{backend}"
            start = time.perf_counter()
            subprocess.run(
                [sys.executable, "-m", "e2credit.cli", "train",
                 str(synth_dir / "snapshots.csv"), "--seed", "0",
                 "--out-dir", str(out_dir)],
                check=True, capture_output=True, env=env,
            )
            elapsed = time.perf_counter() - start
            print(f"  {backend:>6}: {elapsed:8.2f} s (includes interpreter start)")
        if _kernels.NUMBA_AVAILABLE:
            a = (tmp_path / "train_numba" / "forest.e2cf").read_bytes()
            b = (tmp_path / "train_numpy" / "forest.e2cf").read_bytes()
            print(f"  forest files identical: {a == b}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--features", type=int, default=20)
    parser.add_argument("--trees", type=int, default=10)
    parser.add_argument("--m", type=int, default=15)
    parser.add_argument("--depth", type=int, default=15)
    parser.add_argument("--pipeline", action="store_true",
                        help="also benchmark the train command end to end")
    args = parser.parse_args()
    bench_kernels(args)
    if args.pipeline:
        bench_pipeline(args)


if __name__ == "__main__":
    main()
