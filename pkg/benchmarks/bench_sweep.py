#!/usr/bin/env python3
"""Benchmark the compiled sweep kernel against the pure-Python fallback.

Builds iterative-reconciliation problems of increasing size, packs the
per-sub-hierarchy update matrices once, and times the sweep loop itself with
a fixed iteration count so both backends do identical work.

Run from the repository root after `python setup.py build_ext --inplace`:

    python benchmarks/bench_sweep.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from treecast import balanced_hierarchy, shrinkage_covariance  # noqa: E402
from treecast.covariance import ResidualPanel  # noqa: E402
from treecast.kernels import available_backends  # noqa: E402
from treecast.mintit import Mode, _pack_subproblems  # noqa: E402


def make_problem(widths, horizon=4, seed=0):
    rng = np.random.default_rng(seed)
    h = balanced_hierarchy(list(widths))
    residuals = ResidualPanel(
        rng.standard_normal((60, h.n_nodes)), h.labels
    )
    global_cov = shrinkage_covariance(residuals)
    packed = _pack_subproblems(h, residuals, Mode.GLOBAL, global_cov)
    forecasts = rng.standard_normal((h.n_nodes, horizon))
    return h, forecasts, packed


def time_backend(run, forecasts, packed, sweeps, repeats=5):
    best = np.inf
    for _ in range(repeats):
        work = np.ascontiguousarray(forecasts.copy())
        t0 = time.perf_counter()
        run(work, *packed, eps=0.0, maxit=sweeps)  # eps=0 forces all sweeps
        best = min(best, time.perf_counter() - t0)
    return best, work


def main():
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; showing python backend only")
    cases = [
        ("w=2 d=3 (15 nodes)", (2, 2, 2), 400),
        ("w=3 d=4 (121 nodes)", (3, 3, 3, 3), 200),
        ("w=6,4,4,4 (511 nodes)", (6, 4, 4, 4), 100),
    ]
    print(f"{'problem':<24}{'sweeps':>8}", end="")
    for name in backends:
        print(f"{name:>14}", end="")
    if len(backends) == 2:
        print(f"{'speedup':>10}", end="")
    print()
    for label, widths, sweeps in cases:
        _, forecasts, packed = make_problem(widths)
        times = {}
        results = {}
        for name, run in backends.items():
            times[name], results[name] = time_backend(run, forecasts, packed, sweeps)
        print(f"{label:<24}{sweeps:>8}", end="")
        for name in backends:
            print(f"{times[name] * 1e3:>12.2f}ms", end="")
        if len(backends) == 2:
            dev = np.abs(results["python"] - results["compiled"]).max()
            print(f"{times['python'] / times['compiled']:>9.1f}x", end="")
            assert dev < 1e-9, f"backend mismatch: {dev}"
        print()


if __name__ == "__main__":
    main()
