"""Compare the numba kernels with their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once per backend to warm up (JIT compile), then timed.
Results of the two backends are cross-checked before timing is reported.
"""
import argparse
import time

import numpy as np

from phenosurrogate import use_backend
from phenosurrogate.controller import NetTopology, random_genome
from phenosurrogate.evaluation import kendall_counts
from phenosurrogate.maze import build_maze, rollout_batch
from phenosurrogate.surrogate.distance import pairwise_distances


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    maze = build_maze()
    topo = NetTopology(n_hidden=5)
    genomes = random_genome(topo, rng, 16)
    X = rng.normal(size=(400, 256))
    a = rng.integers(0, 50, 5000).astype(float)
    b = a + rng.normal(size=5000)
    return {
        "rollout 16x300 steps": lambda: rollout_batch(maze, genomes, topo)[0],
        "pairwise L1 400x256": lambda: pairwise_distances(X),
        "kendall n=5000": lambda: np.array(kendall_counts(a, b), dtype=float),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<24}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in cases().items():
        with use_backend("numba"):
            fast = fn()
            t_fast = _time(fn, args.repeat)
        with use_backend("numpy"):
            slow = fn()
            t_slow = _time(fn, args.repeat)
        if not np.allclose(fast, slow, rtol=0, atol=1e-8):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<24}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
