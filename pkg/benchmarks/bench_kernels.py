#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times each hot-path kernel on both backends at two image sizes, then times
a short end-to-end attack run per backend (the fallback pass re-executes
this script in a subprocess with TRIATTACK_PURE_PYTHON=1, since the backend
is chosen at import time).

Usage: python benchmarks/bench_kernels.py [--repeat 2000] [--queries 300]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from triattack import kernels  # noqa: E402
from triattack.kernels import _fallback  # noqa: E402

try:
    from triattack.kernels import _core
except ImportError:
    _core = None

SIZES = [(64, 64, 3), (224, 224, 3)]


def time_call(fn, args, repeat):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def kernel_table(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'size':<12}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for shape in SIZES:
        base, u, v = rng.normal(size=(3,) + shape)
        cases = {
            "add_scaled2": ((base, u, v, 1.1, -0.4), "add_scaled2"),
            "l2dist": ((base, u), "l2dist"),
            "project_out": ((u, v / np.linalg.norm(v)), "project_out"),
        }
        for name, (args, attr) in cases.items():
            t_py = time_call(getattr(_fallback, attr), args, repeat)
            if _core is None:
                print(f"{name:<14}{str(shape):<12}{t_py*1e6:>10.1f}us{'n/a':>12}{'':>9}")
                continue
            t_c = time_call(getattr(_core, attr), args, repeat)
            print(
                f"{name:<14}{str(shape):<12}{t_py*1e6:>10.1f}us{t_c*1e6:>10.1f}us{t_py/t_c:>8.2f}x"
            )


def attack_seconds(queries, side):
    import triattack as ta
    from conftest import make_halfspace_instance

    x, oracle, _ = make_halfspace_instance(0, shape=(side, side, 3))
    y = oracle.predict(x)
    cfg = ta.AttackConfig(max_queries=queries)
    best = float("inf")
    for rep in range(5):
        start = time.perf_counter()
        ta.run(x, y, oracle, cfg, np.random.default_rng(1))
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--queries", type=int, default=300)
    parser.add_argument("--attack-only", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--side", type=int, default=32, help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.attack_only:
        print(json.dumps({"seconds": attack_seconds(args.queries, args.side)}))
        return

    print(f"active backend: {kernels.backend()}\n")
    kernel_table(args.repeat)

    for side in (32, 128):
        print(f"\nend-to-end attack, {args.queries} queries on a {side}x{side}x3 halfspace:")
        t_active = attack_seconds(args.queries, side)
        env = dict(os.environ, TRIATTACK_PURE_PYTHON="1")
        out = subprocess.run(
            [
                sys.executable,
                os.path.abspath(__file__),
                "--attack-only",
                "--queries",
                str(args.queries),
                "--side",
                str(side),
            ],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        t_python = json.loads(out.stdout)["seconds"]
        print(f"  {kernels.backend():>9}: {t_active:.3f}s")
        print(f"     python: {t_python:.3f}s")
        if kernels.backend() == "compiled":
            print(f"    speedup: {t_python / t_active:.2f}x")


if __name__ == "__main__":
    main()
