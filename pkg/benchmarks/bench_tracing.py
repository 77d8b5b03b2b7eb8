#!/usr/bin/env python3
"""Benchmark the ray-stepping backends (compiled kernel vs numpy fallback).

Usage: python benchmarks/bench_tracing.py [n_reflections]
"""

import importlib
import math
import sys
import time

import numpy as np

from billiard3d import _trace_ref, geometry


def _load_compiled():
    try:
        return importlib.import_module("billiard3d._trace_fast")
    except ImportError:
        return None


def bench(step, patches, origin, direction, n, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        status, idx, pts, dirs, drift = step(patches, origin, direction, n)
        dt = time.perf_counter() - t0
        assert status == 0, "reference orbit escaped during the benchmark"
        best = min(best, dt)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    tables = {
        "cube l=1.5 (6 patches)": geometry.build_cube_table(1.5),
        "flats phi=62deg (12 patches)": geometry.build_flats_table(
            1 / math.cos(math.radians(62)) + 0.05, math.radians(62)
        ),
    }
    fast = _load_compiled()
    print(f"{n} reflections per run, best of 3")
    print(f"{'table':<30} {'backend':<10} {'seconds':>10} {'refl/s':>12}")
    for name, table in tables.items():
        start = table.start_ray()
        rows = [("python", _trace_ref.trace_steps)]
        if fast is not None:
            rows.append(("compiled", fast.trace_steps))
        times = {}
        for backend, step in rows:
            dt = bench(step, table.packed, start.origin, start.direction, n)
            times[backend] = dt
            print(f"{name:<30} {backend:<10} {dt:>10.3f} {n / dt:>12.0f}")
        if fast is not None:
            print(f"{name:<30} {'speedup':<10} {times['python'] / times['compiled']:>10.1f}x")
    if fast is None:
        print("compiled kernel not built; only the fallback was measured")


if __name__ == "__main__":
    main()
