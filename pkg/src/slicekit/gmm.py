"""Diagonal-covariance Gaussian mixtures: k-means++ init, EM, BIC, gap statistic.

The E-step density evaluation runs through the kernels in ``_accel`` (numba
by default, numpy fallback via SLICEKIT_NO_NUMBA=1).
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import _accel
from .errors import DimensionMismatch, KExceedsN

WEIGHT_UNDERFLOW = 1e-12


@dataclass(frozen=True)
class FitConfig:
    k_min: int = 2
    k_max: int = 10
    n_restarts: int = 5
    max_iter: int = 200
    tol: float = 1e-5  # per-sample log-likelihood change
    seed: int = 0
    var_floor: float = 1e-6

    def __post_init__(self):
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError("need 1 <= k_min <= k_max")
        if self.tol <= 0 or self.var_floor <= 0:
            raise ValueError("tol and var_floor must be > 0")


@dataclass
class GmmModel:
    weights: np.ndarray  # (k,)
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k, d)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def to_json(self, seed=None, config=None):
        return json.dumps(
            {
                "k": self.k,
                "d": self.dim,
                "weights": self.weights.tolist(),
                "means": self.means.ravel().tolist(),
                "variances": self.variances.ravel().tolist(),
                "seed": seed,
                "config": asdict(config) if config else None,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        k, d = obj["k"], obj["d"]
        return cls(
            weights=np.array(obj["weights"], dtype=float),
            means=np.array(obj["means"], dtype=float).reshape(k, d),
            variances=np.array(obj["variances"], dtype=float).reshape(k, d),
        )


def kmeanspp_init(X, k, rng):
    """k-means++ seeding: next center drawn proportionally to squared distance
    to the nearest chosen center."""
    n = X.shape[0]
    if k > n:
        raise KExceedsN(f"k={k} exceeds N={n}")
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    for j in range(1, k):
        d2, _ = _accel.min_sqdist(X, centers[:j])
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = rng.choice(n, p=probs)
        else:  # all points coincide with chosen centers
            idx = rng.integers(n)
        centers[j] = X[idx]
    return centers


def _e_step(X, model):
    """Responsibilities and total log-likelihood via log-sum-exp."""
    wlp = _accel.weighted_log_prob(
        X, model.means, model.variances, np.log(model.weights)
    )
    row_max = wlp.max(axis=1, keepdims=True)
    shifted = np.exp(wlp - row_max)
    norm = shifted.sum(axis=1, keepdims=True)
    resp = shifted / norm
    ll = float(np.sum(np.log(norm) + row_max))
    return resp, ll


def _m_step(X, resp, var_floor):
    nk = resp.sum(axis=0)
    weights = nk / resp.shape[0]
    means = (resp.T @ X) / nk[:, None]
    sq = (resp.T @ (X * X)) / nk[:, None]
    variances = np.maximum(sq - means * means, var_floor)
    return GmmModel(weights=weights, means=means, variances=variances)


def _drop_degenerate(model):
    keep = model.weights > WEIGHT_UNDERFLOW
    if keep.all():
        return model
    w = model.weights[keep]
    return GmmModel(weights=w / w.sum(), means=model.means[keep],
                    variances=model.variances[keep])


def _fit_once(X, k, config, rng, trace=None):
    n = X.shape[0]
    means = kmeanspp_init(X, k, rng)
    global_var = np.maximum(X.var(axis=0), config.var_floor)
    model = GmmModel(
        weights=np.full(k, 1.0 / k),
        means=means,
        variances=np.tile(global_var, (k, 1)),
    )
    prev_ll = -np.inf
    resp, ll = _e_step(X, model)
    for _ in range(config.max_iter):
        model = _drop_degenerate(_m_step(X, resp, config.var_floor))
        resp, ll = _e_step(X, model)
        if trace is not None:
            trace.append(ll)
        if (ll - prev_ll) / n < config.tol:
            break
        prev_ll = ll
    return model, resp, ll


def em_fit(X, k, config, rng, trace=None):
    """Best of config.n_restarts EM runs by final log-likelihood.

    Components whose weight underflows below 1e-12 are dropped, so the
    returned model may report a smaller k than requested. When ``trace`` is
    a list, the per-iteration log-likelihoods of every restart are appended
    to it (one sub-list per restart).
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] < k:
        raise KExceedsN(f"k={k} exceeds N={X.shape[0]}")
    best = None
    for _ in range(max(config.n_restarts, 1)):
        run_trace = [] if trace is not None else None
        model, resp, ll = _fit_once(X, k, config, rng, trace=run_trace)
        if trace is not None:
            trace.append(run_trace)
        if best is None or ll > best[2]:
            best = (model, resp, ll)
    return best


def log_likelihood(model, X):
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"data dim {X.shape[1]} != model dim {model.dim}")
    _, ll = _e_step(X, model)
    return ll


def n_parameters(k, d):
    """Free parameters of a diagonal GMM: (k-1) weights + k*d means + k*d variances."""
    return (k - 1) + 2 * k * d


def bic(model, X):
    """p * ln(N) - 2 * logL; lower is better."""
    n = np.asarray(X).shape[0]
    p = n_parameters(model.k, model.dim)
    return p * np.log(n) - 2.0 * log_likelihood(model, X)


def select_k(X, config):
    """Sweep k in [k_min, k_max], return the BIC-minimal fit (ties -> smaller k)."""
    X = np.asarray(X, dtype=float)
    best = None
    k_hi = min(config.k_max, X.shape[0])
    for k in range(config.k_min, k_hi + 1):
        # independent child stream per k so the sweep order is irrelevant
        model, resp, _ = em_fit(X, k, config, np.random.default_rng([config.seed, k]))
        score = bic(model, X)
        if best is None or score < best[0] - 1e-12:
            best = (score, model, resp)
    return best[1], best[2]


def hard_assign(resp):
    """Argmax cluster per row; ties go to the lowest component index."""
    return np.argmax(resp, axis=1)


def _kmeans(X, k, rng, max_iter=100):
    centers = kmeanspp_init(X, k, rng)
    for _ in range(max_iter):
        _, assign = _accel.min_sqdist(X, centers)
        new_centers = centers.copy()
        for j in range(k):
            members = X[assign == j]
            if members.shape[0]:
                new_centers[j] = members.mean(axis=0)
        if np.allclose(new_centers, centers):
            break
        centers = new_centers
    d2, assign = _accel.min_sqdist(X, centers)
    return centers, assign, float(d2.sum())


def gap_statistic(X, k_candidates, n_refs, rng):
    """Tibshirani-style gap: E_ref[log W_k] - log W_k with uniform references
    drawn in the bounding box of X; also returns the reference spreads s_k."""
    X = np.asarray(X, dtype=float)
    if n_refs < 1:
        raise ValueError("n_refs must be >= 1")
    lo, hi = X.min(axis=0), X.max(axis=0)
    gaps, spreads = [], []
    for k in k_candidates:
        _, _, w = _kmeans(X, k, rng)
        ref_logs = np.empty(n_refs)
        for r in range(n_refs):
            ref = rng.uniform(lo, hi, size=X.shape)
            _, _, w_ref = _kmeans(ref, k, rng)
            ref_logs[r] = np.log(w_ref)
        gaps.append(float(ref_logs.mean() - np.log(w)))
        spreads.append(float(ref_logs.std() * np.sqrt(1.0 + 1.0 / n_refs)))
    return np.array(gaps), np.array(spreads)
