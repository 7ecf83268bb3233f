#!/usr/bin/env python3
"""Benchmark the compiled sampling kernel against its pure-Python twin.

Both backends draw from the same seeded BitGenerator and produce
bit-identical output; this script measures the speed gap on the two kernel
entry points and on a full Monte Carlo teleportation run.

Usage: python benchmarks/bench_kernels.py [--pairs N] [--trials N]
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from spinport import _kernel_py

try:
    from spinport import _kernel
except ImportError:
    _kernel = None

DELTA = 2 * math.pi * 0.0049
LIFETIME = 650.0
ROOT_HALF = 1 / math.sqrt(2)


def bitgen(seed=1):
    return np.random.PCG64(np.random.SeedSequence([seed]))


def bench(fn, *args, repeat=3):
    best = math.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_pair_clicks(mod, n):
    return bench(
        mod.sample_pair_clicks,
        bitgen(11), n,
        0.0, LIFETIME, ROOT_HALF, 0.0, ROOT_HALF, 0.0,
        0.0, LIFETIME, 0.0, 0.0, 0.0, 0.0, True,
        DELTA, 0.802,
    )


def bench_times(mod, n):
    return bench(mod.sample_times, bitgen(12), n, 0.0, LIFETIME, ROOT_HALF, 0.0, ROOT_HALF, 0.0, DELTA)


def bench_teleport(trials, backend):
    """Full protocol run in a subprocess so the kernel backend env applies."""
    code = (
        "from spinport.protocol import ExperimentConfig, NoiseModel, run_teleportation\n"
        f"cfg = ExperimentConfig(trials={trials}, seed=3)\n"
        "noise = NoiseModel(overlap=0.8, jitter_sigma=60.0, p_exc=0.9, p_up_init=0.55)\n"
        "res = run_teleportation(cfg, noise, mode='mc')\n"
        "print(f'{res.f_overall:.6f}')\n"
    )
    env = dict(os.environ, SPINPORT_KERNEL=backend)
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return elapsed, out.stdout.strip()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--trials", type=int, default=100_000)
    args = parser.parse_args()

    if _kernel is None:
        print("compiled kernel not available; showing pure-Python timings only")

    rows = []
    t_py, ref_py = bench_pair_clicks(_kernel_py, args.pairs)
    rows.append(("sample_pair_clicks", args.pairs, t_py, None))
    if _kernel is not None:
        t_c, ref_c = bench_pair_clicks(_kernel, args.pairs)
        assert all(np.array_equal(a, b) for a, b in zip(ref_py, ref_c)), "backend outputs differ"
        rows[-1] = ("sample_pair_clicks", args.pairs, t_py, t_c)

    t_py, ref_py = bench_times(_kernel_py, args.pairs)
    rows.append(("sample_times", args.pairs, t_py, None))
    if _kernel is not None:
        t_c, ref_c = bench_times(_kernel, args.pairs)
        assert np.array_equal(ref_py, ref_c), "backend outputs differ"
        rows[-1] = ("sample_times", args.pairs, t_py, t_c)

    t_py, f_py = bench_teleport(args.trials, "python")
    if _kernel is not None:
        t_c, f_c = bench_teleport(args.trials, "cython")
        assert f_py == f_c, "teleportation results differ between backends"
        rows.append(("teleport end-to-end", args.trials, t_py, t_c))
    else:
        rows.append(("teleport end-to-end", args.trials, t_py, None))

    print(f"\n{'kernel':<22}{'n':>10}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, n, tp, tc in rows:
        if tc is None:
            print(f"{name:<22}{n:>10}{tp:>11.3f}s{'-':>12}{'-':>10}")
        else:
            print(f"{name:<22}{n:>10}{tp:>11.3f}s{tc:>11.3f}s{tp / tc:>9.1f}x")
    print("\noutputs verified bit-identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
