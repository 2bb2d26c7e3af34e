"""Benchmark the numba kernels against the pure-numpy fallback.

Run with: python3 benchmarks/bench_backends.py
The numpy fallback alone can be selected at import time for the whole
toolkit via SLICEKIT_NO_NUMBA=1; here both variants are timed side by side
and their numerical agreement is reported.
"""

import time

import numpy as np

from slicekit import _accel
from slicekit import gmm


def time_fn(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not _accel.USE_NUMBA:
        print("numba backend unavailable (SLICEKIT_NO_NUMBA set or numba missing);")
        print("nothing to compare.")
        return

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'size':<18}{'numba':>10}{'numpy':>10}{'speedup':>9}{'max|diff|':>12}")
    for n, d, k in [(2_000, 8, 5), (20_000, 32, 8), (50_000, 128, 10)]:
        X = rng.standard_normal((n, d))
        means = rng.standard_normal((k, d))
        variances = rng.uniform(0.5, 2.0, (k, d))
        logw = np.log(np.full(k, 1.0 / k))

        # warm up the JIT before timing
        _accel._weighted_log_prob_nb(X[:10], means, variances, logw)
        t_nb = time_fn(_accel._weighted_log_prob_nb, X, means, variances, logw)
        t_np = time_fn(_accel._weighted_log_prob_np, X, means, variances, logw)
        diff = np.max(
            np.abs(
                _accel._weighted_log_prob_nb(X, means, variances, logw)
                - _accel._weighted_log_prob_np(X, means, variances, logw)
            )
        )
        print(f"{'weighted_log_prob':<28}{f'{n}x{d}, k={k}':<18}"
              f"{t_nb * 1e3:>9.2f}ms{t_np * 1e3:>8.2f}ms{t_np / t_nb:>8.1f}x{diff:>12.2e}")

        centers = rng.standard_normal((k, d))
        _accel._min_sqdist_nb(X[:10], centers)
        t_nb = time_fn(_accel._min_sqdist_nb, X, centers)
        t_np = time_fn(_accel._min_sqdist_np, X, centers)
        d_nb, a_nb = _accel._min_sqdist_nb(X, centers)
        d_np, a_np = _accel._min_sqdist_np(X, centers)
        diff = max(np.max(np.abs(d_nb - d_np)), float((a_nb != a_np).mean()))
        print(f"{'min_sqdist':<28}{f'{n}x{d}, k={k}':<18}"
              f"{t_nb * 1e3:>9.2f}ms{t_np * 1e3:>8.2f}ms{t_np / t_nb:>8.1f}x{diff:>12.2e}")

    # end-to-end EM fit, numba path only (backend chosen at import)
    X = np.concatenate(
        [rng.normal(c, 0.5, (3_000, 16)) for c in (-4.0, 0.0, 4.0)]
    )
    cfg = gmm.FitConfig(n_restarts=3, seed=0)
    t = time_fn(lambda: gmm.em_fit(X, 3, cfg, np.random.default_rng(0)), repeat=3)
    print(f"\nem_fit 9000x16 k=3 (current backend): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
