"""Compare the compiled and pure-numpy backends on the three hot kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times pass accumulation, the symmetric eigensolver, and the dense coherence
scan on each backend and prints a small table.  The same work runs on both
paths, so the ratio column is the speedup of the compiled kernels.
"""

import argparse
import time

import numpy as np

import hpca
from hpca.hpca_core import run_pass


def make_dataset(n=4000, p=200_000, nnz=40, seed=1):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        idx = np.sort(rng.choice(p, nnz, replace=False))
        rows.append(hpca.make_row(idx, rng.normal(size=nnz)))
    return hpca.SparseDataset.from_rows(rows, p=p)


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    d, l = 2048, 32
    ds = make_dataset()
    sh, sx, _ = hpca.derive_seeds(7)
    spec = hpca.HashSpec(d, sh, sx)
    M = hpca.gaussian_matrix(d, l, 11)

    A = hpca.gaussian_matrix(300, 300, 13)
    A = (A + A.T) / 2

    X = hpca.gaussian_matrix(1500, 800, 17)

    cases = {
        "pass_accumulate": lambda: run_pass(ds, spec, M),
        "sym_eig_300":     lambda: hpca.sym_eig(A),
        "coherence_dense": lambda: hpca.coherence_eta(hpca.from_dense(X), pairs=False),
    }

    results = {}
    for backend in ("numba", "numpy"):
        try:
            hpca.set_backend(backend)
        except Exception as exc:
            print(f"{backend}: unavailable ({exc})")
            continue
        for name, fn in cases.items():
            fn()  # warm (JIT compile / cache)
            results[(name, backend)] = bench(fn, args.repeat)

    print(f"{'kernel':<18}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name in cases:
        nb = results.get((name, "numba"))
        npy = results.get((name, "numpy"))
        ratio = f"{npy / nb:8.1f}x" if nb and npy else "     n/a"
        fmt = lambda t: f"{t:9.4f}s" if t is not None else "      n/a"
        print(f"{name:<18}{fmt(nb)}{fmt(npy)}{ratio}")


if __name__ == "__main__":
    main()
