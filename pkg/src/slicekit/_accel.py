"""Hot numeric kernels with numba-compiled and pure-numpy variants.

The numba path is the default. Setting the environment variable
``SLICEKIT_NO_NUMBA=1`` before import selects the pure-numpy fallback
(useful on platforms without a working JIT, and for benchmarking --
see benchmarks/bench_backends.py). Both variants agree to ~1e-9 relative
tolerance; they are not bit-identical because summation order differs.
"""

import os

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def _weighted_log_prob_np(X, means, variances, log_weights):
    """N x k matrix of log w_j + log N(x_i | mu_j, diag v_j)."""
    n, d = X.shape
    k = means.shape[0]
    out = np.empty((n, k))
    for j in range(k):
        v = variances[j]
        diff = X - means[j]
        quad = np.sum(diff * diff / v, axis=1)
        out[:, j] = log_weights[j] - 0.5 * (d * LOG_2PI + np.sum(np.log(v)) + quad)
    return out


def _min_sqdist_np(X, centers):
    """Per-row squared distance to the nearest center, and its index."""
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2.min(axis=1), d2.argmin(axis=1).astype(np.int64)


USE_NUMBA = os.environ.get("SLICEKIT_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:
        USE_NUMBA = False

if USE_NUMBA:

    @njit(cache=True, parallel=False)
    def _weighted_log_prob_nb(X, means, variances, log_weights):
        n, d = X.shape
        k = means.shape[0]
        out = np.empty((n, k))
        logdet = np.empty(k)
        for j in range(k):
            s = 0.0
            for c in range(d):
                s += np.log(variances[j, c])
            logdet[j] = s
        for i in range(n):
            for j in range(k):
                quad = 0.0
                for c in range(d):
                    diff = X[i, c] - means[j, c]
                    quad += diff * diff / variances[j, c]
                out[i, j] = log_weights[j] - 0.5 * (d * LOG_2PI + logdet[j] + quad)
        return out

    @njit(cache=True, parallel=False)
    def _min_sqdist_nb(X, centers):
        n, d = X.shape
        k = centers.shape[0]
        best = np.empty(n)
        arg = np.empty(n, dtype=np.int64)
        for i in range(n):
            bi = np.inf
            bj = 0
            for j in range(k):
                s = 0.0
                for c in range(d):
                    diff = X[i, c] - centers[j, c]
                    s += diff * diff
                if s < bi:
                    bi = s
                    bj = j
            best[i] = bi
            arg[i] = bj
        return best, arg

    weighted_log_prob = _weighted_log_prob_nb
    min_sqdist = _min_sqdist_nb
else:
    weighted_log_prob = _weighted_log_prob_np
    min_sqdist = _min_sqdist_np
