"""Benchmark the hot factorization kernel and an end-to-end policy run on
both backends (numba JIT vs pure numpy).

Usage: python benchmarks/kernel_bench.py [--rounds 2000]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from causalbandits import kernels


def time_fn(fn, *args, repeat: int = 7, inner: int = 50) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / inner)
    return best


def kernel_micro_bench():
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.active_backend()}")
    print(f"{'case':>28}  {'numba/jit':>12}  {'numpy':>12}  {'speedup':>8}")
    for n_nodes, n_enum, n_buckets in [(4, 8, 12), (7, 64, 40), (10, 512, 120), (14, 8192, 400)]:
        keys = rng.integers(0, n_buckets, size=(n_nodes, n_enum))
        vals = rng.integers(0, 2, size=(n_nodes, n_enum))
        prob = rng.uniform(0.05, 0.95, size=(n_buckets, 2))
        if kernels.active_backend() == "numba":
            kernels.factorization_sum(keys, vals, prob)  # compile once
            fast = time_fn(kernels.factorization_sum, keys, vals, prob)
        else:
            fast = float("nan")
        ref = time_fn(kernels.factorization_sum_numpy, keys, vals, prob)
        label = f"{n_nodes} nodes x {n_enum} terms"
        ratio = ref / fast if fast == fast else float("nan")
        print(f"{label:>28}  {fast * 1e6:>10.2f}us  {ref * 1e6:>10.2f}us  {ratio:>7.1f}x")


END_TO_END = r"""
import time
import numpy as np
from causalbandits import example_graph, make_xor_model
from causalbandits.scm import CostSet
from causalbandits.policies import PolicyConfig, run_policy
g = example_graph("chain6")
scm = make_xor_model(g, np.random.default_rng(3))
costs = CostSet.uniform(g, 2.0)
run_policy(scm, g, PolicyConfig(kind="cumulative-ucb", budget=100, costs=costs, seed=0))
start = time.perf_counter()
for seed in range(5):
    run_policy(scm, g, PolicyConfig(kind="cumulative-ucb", budget={budget}, costs=costs, seed=seed))
print((time.perf_counter() - start) / 5)
"""


def end_to_end_bench(budget: int):
    print(f"\nend-to-end: adaptive UCB run at budget {budget} (mean of 5 seeds)")
    for backend in ("numba", "numpy"):
        env = dict(os.environ, CAUSALBANDITS_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, "-c", END_TO_END.format(budget=budget)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        seconds = float(out.stdout.strip().splitlines()[-1])
        print(f"  {backend:>6}: {seconds:.3f}s per run")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=2000, help="budget of the end-to-end run")
    args = parser.parse_args()
    kernel_micro_bench()
    end_to_end_bench(args.rounds)


if __name__ == "__main__":
    main()
