"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--hours 8760] [--repeat 5]

Both backends are imported from the same module, so the env flag is not
needed here.  The first numba call (compilation, or loading the on-disk
cache) is reported separately.
"""
import argparse
import time

import numpy as np

from h2bid import _kernels
from h2bid.backtest import build_pools, run_methods, BacktestConfig
from h2bid.synthetic import synthetic_dataset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--hours", type=int, default=8760)
    ap.add_argument("--k", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    data = synthetic_dataset(args.hours, seed=0)
    f = np.ascontiguousarray(data.forecast)
    elig = f >= 1e-6 * data.res_capacity
    pools = build_pools(data, args.k, data.res_capacity)

    rng = np.random.default_rng(0)
    sizes = rng.integers(1, 11, args.hours)
    values = np.concatenate([np.sort(rng.uniform(0, 50, s)) for s in sizes])
    probs = np.concatenate([np.full(s, 1.0 / s) for s in sizes])
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    lam = np.ascontiguousarray(data.price)
    q = rng.uniform(0, 50, args.hours)

    cases = {
        "knn_pools": ((f, elig, 0, f.size, args.k), _kernels.knn_pools_numba, _kernels.knn_pools_numpy),
        "clear_scenario_batch": ((values, probs, offsets, lam, 18.0, 2.0, 4.0, 50.0, 1e-9),
                                 _kernels.clear_scenario_batch_numba, _kernels.clear_scenario_batch_numpy),
        "settle_batch": ((q, lam, np.ascontiguousarray(data.realized), 18.0, 2.0, 4.0),
                         _kernels.settle_batch_numba, _kernels.settle_batch_numpy),
    }
    print(f"{args.hours} hours, K={args.k}, best of {args.repeat}")
    print(f"{'kernel':22s} {'first numba':>12s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, (a, fast, slow) in cases.items():
        t0 = time.perf_counter()
        fast(*a)
        first = time.perf_counter() - t0
        tn = best_of(lambda: fast(*a), args.repeat)
        tp = best_of(lambda: slow(*a), args.repeat)
        print(f"{name:22s} {first:11.4f}s {tn:9.4f}s {tp:9.4f}s {tp / tn:7.1f}x")

    t = best_of(lambda: run_methods(data, BacktestConfig(), pools=pools), 1)
    print(f"\nfull three-method backtest (pools prebuilt, {_kernels.BACKEND} backend): {t:.3f}s")


if __name__ == "__main__":
    main()
