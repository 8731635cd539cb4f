"""Timing comparison of the numba and numpy backends on the hot kernels.

Run as: python3 benchmarks/bench_kernels.py [--repeat N]
Outputs one line per (kernel, backend) plus the speedup ratio. The first
numba call per kernel warms the JIT cache and is excluded from timing.
"""

import argparse
import time

import numpy as np

from tradekernel import cycles, kernels
from tradekernel.primes import default_primes


def build_cases():
    p = default_primes(1)[0]
    ds = cycles.enumerate_double_diamonds(9)
    dim = len(cycles.enumerate_cycles(9))
    stack = np.zeros((len(ds), dim), dtype=np.int64)
    for r, d in enumerate(ds):
        v = cycles.diamond_vector(d, 9).entries
        stack[r] = v
    stack_mod = stack % p

    rng = np.random.default_rng(2)
    dense = rng.integers(0, p, size=(378, 756)).astype(np.int64)

    n = 17
    arr = cycles.cycle_edge_array(n)
    by_edge = cycles._cycles_by_edge(n)
    ne = cycles.edge_count(n)
    maxdeg = max(len(b) for b in by_edge)
    cand = np.full((ne, maxdeg), -1, dtype=np.int64)
    cand_len = np.zeros(ne, dtype=np.int64)
    for e, lst in enumerate(by_edge):
        cand[e, : len(lst)] = lst
        cand_len[e] = len(lst)

    return {
        "modp_rank 3780x378": lambda: kernels.modp_rank(stack_mod, p),
        "greedy_filter 3780x378": lambda: kernels.greedy_rank_filter(stack_mod, p),
        "modp_rref 378x756": lambda: kernels.modp_rref(dense.copy(), p),
        "cover_dfs K_17": lambda: kernels.cover_dfs(ne, arr, cand, cand_len, 1_000_000),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = build_cases()
    backends = kernels.available_backends()
    results: dict[tuple[str, str], float] = {}
    for name, fn in cases.items():
        for backend in backends:
            kernels.use_backend(backend)
            fn()  # warm (JIT compile / cache load)
            best = min(
                (lambda t0: (fn(), time.perf_counter() - t0)[1])(time.perf_counter())
                for _ in range(args.repeat)
            )
            results[(name, backend)] = best
            print(f"{name:24s} {backend:6s} {best * 1e3:10.2f} ms")
    if "numba" in backends:
        print()
        for name in cases:
            ratio = results[(name, "numpy")] / results[(name, "numba")]
            print(f"{name:24s} numpy/numba speedup {ratio:6.2f}x")
    kernels.use_backend("numba" if "numba" in backends else "numpy")


if __name__ == "__main__":
    main()
