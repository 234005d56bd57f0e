"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--n 400] [--repeats 200]
The numba path includes a warm-up call so JIT compilation is not timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coarsekit import _kernels


def make_metric(n: int, rng) -> np.ndarray:
    pts = rng.integers(0, 4 * n, size=(n, 2))
    D = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(np.int64)
    return D


def bench(fn, args, repeats: int) -> float:
    fn(*args)  # warm-up (JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    D = make_metric(args.n, rng)
    ia = np.arange(0, args.n, 2, dtype=np.int64)
    ib = np.arange(1, args.n, 2, dtype=np.int64)
    thr = int(np.percentile(D, 10))
    W = rng.random((args.n, 64))
    il = rng.integers(0, args.n, size=512).astype(np.int64)
    jl = rng.integers(0, args.n, size=512).astype(np.int64)

    cases = [
        ("min_between", (_kernels.min_between_np, _kernels.min_between_nb), (D, ia, ib)),
        ("max_within", (_kernels.max_within_np, _kernels.max_within_nb), (D, ia)),
        ("min_to_set", (_kernels.min_to_set_np, _kernels.min_to_set_nb), (D, ia)),
        ("component_labels", (_kernels.component_labels_np, _kernels.component_labels_nb), (D, ia, thr)),
        ("l1_rows", (_kernels.l1_rows_np, _kernels.l1_rows_nb), (W, il, jl)),
    ]

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable; only the numpy path can run")

    print(f"n={args.n}, repeats={args.repeats}")
    print(f"{'kernel':<18}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn), case_args in cases:
        t_np = bench(np_fn, case_args, args.repeats)
        if _kernels.HAVE_NUMBA:
            t_nb = bench(nb_fn, case_args, args.repeats)
            print(f"{name:<18}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<18}{t_np * 1e6:>10.1f}us{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
