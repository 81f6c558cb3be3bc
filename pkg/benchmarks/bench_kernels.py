#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Kernel-level numbers come from calling both implementations in one process.
The end-to-end row runs a speaker bootstrap in two subprocesses, one with
VOXFAIR_DISABLE_JIT=1, so the backend switch itself is exercised.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 20000]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from voxfair import kernels as k
from voxfair._accel import HAS_NUMBA

E2E = """
import time, numpy as np
from voxfair.kernels import BACKEND
from voxfair.resampling import bootstrap_metric
from voxfair.synthetic import generate, preset
ev = generate(preset("table1-offsets"))
acc = lambda e: float(np.mean((e.posterior >= 0.25) == (e.label == 1)))
bootstrap_metric(ev, acc, 100)
t = time.perf_counter()
bootstrap_metric(ev, acc, 1000)
print(BACKEND, time.perf_counter() - t)
"""


def best(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(n, rng):
    scores = np.sort(rng.normal(size=n))
    y = (rng.random(n) < 1 / (1 + np.exp(-scores))).astype(np.float64)
    x = rng.normal(size=n)
    yl = (rng.random(n) < 1 / (1 + np.exp(-(1.5 * x - 0.3)))).astype(np.float64)
    n_spk = n // 4
    offsets = np.arange(0, n + 1, 4, dtype=np.int64)
    members = rng.permutation(n).astype(np.int64)
    draws = rng.integers(0, n_spk, n_spk).astype(np.int64)
    cells = rng.integers(0, 7, n).astype(np.int64)
    labels = rng.integers(0, 2, n).astype(np.int8)
    dec = rng.integers(0, 2, n).astype(np.int8)
    return {
        "pav_blocks": (k._pav_blocks_nb, k._pav_blocks_np, (scores, y)),
        "logistic_fit": (k._logistic_fit_nb, k._logistic_fit_np, (x, yl, 1.0, 0.0, 500, 1e-9)),
        "gather_speakers": (k._gather_speakers_nb, k._gather_speakers_np, (offsets, members, draws)),
        "cell_counts": (k._cell_counts_nb, k._cell_counts_np, (cells, labels, dec, 7)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()

    if not HAS_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, (nb, npy, a) in cases(args.n, rng).items():
        t_nb = best(lambda: nb(*a), args.repeat)
        t_np = best(lambda: npy(*a), args.repeat)
        print(f"{name:<18}{t_nb * 1e3:>10.3f}{t_np * 1e3:>10.3f}{t_np / t_nb:>8.1f}x")

    if args.skip_e2e:
        return
    print("\nbootstrap, 1000 replicates, 1974 samples")
    for flag in ("0", "1"):
        env = dict(os.environ, VOXFAIR_DISABLE_JIT=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<8}{float(secs):.3f} s")


if __name__ == "__main__":
    main()
