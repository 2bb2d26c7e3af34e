"""Statistical kernel: Brier score, AUROC, quantiles, bootstrap, Mann-Whitney U.

All functions are pure and operate on plain numpy arrays; scores live in
[0, 1] and labels are binary.
"""

from dataclasses import dataclass
from math import comb, erfc, sqrt

import numpy as np

from .errors import EmptyInput, SingleClassInput

# Exact Mann-Whitney enumeration is used only for tie-free samples up to
# this pooled size (C(16, 8) = 12870 arrangements).
EXACT_MWU_MAX_N = 16


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # "exact" or "normal_approx"
    n1: int
    n2: int


def brier(scores, labels):
    """Mean squared error between confidence and binary label."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.size == 0:
        raise EmptyInput("brier requires at least one sample")
    d = scores - labels
    return float(np.mean(d * d))


def _midranks(values):
    """Ranks 1..n with ties assigned the mean of their rank range."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels):
    """Rank-based AUROC with half credit for ties.

    Equals the probability that a random positive outscores a random
    negative, counting ties as 1/2.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("auroc requires both classes")
    ranks = _midranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def empirical_quantile(values, q):
    """Linear interpolation between closest order statistics."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("empirical_quantile requires at least one value")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    return float(np.quantile(values, q, method="linear"))


def bootstrap_metric(scores, labels, metric, n_boot, seed):
    """Metric values over n_boot resamples with replacement at original size."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = scores.size
    if n == 0:
        raise EmptyInput("bootstrap_metric requires at least one sample")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        out[b] = metric(scores[idx], labels[idx])
    return out


def _rank_sum(a, b):
    """U statistic of a (midranks for ties) and the pooled midranks."""
    n1 = len(a)
    pooled = np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    ranks = _midranks(pooled)
    u_a = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    return u_a, ranks


def _exact_two_sided_p(u_obs, n1, n2):
    """P(min(U', n1*n2 - U') <= min(U, n1*n2 - U)) over all rank arrangements.

    The null U distribution is symmetric about n1*n2/2, so this equals the
    usual 2 * P(U <= u_min) definition.
    """
    counts = _u_distribution(n1, n2)
    # u statistics are integers for tie-free data
    ti = int(round(min(u_obs, n1 * n2 - u_obs)))
    if ti >= n1 * n2 - ti:  # overlapping tails (central U)
        hits = counts.sum()
    else:
        hits = counts[: ti + 1].sum() + counts[n1 * n2 - ti :].sum()
    return float(hits / comb(n1 + n2, n1))


def _u_distribution(n1, n2):
    """Null counts of each U value (tie-free), via the standard recurrence
    c(n1, n2, u) = c(n1-1, n2, u-n2) + c(n1, n2-1, u)."""
    table = {}

    def c(a, b):
        key = (a, b)
        if key in table:
            return table[key]
        if a == 0 or b == 0:
            arr = np.zeros(a * b + 1, dtype=np.int64)
            arr[0] = 1
            table[key] = arr
            return arr
        prev_a = c(a - 1, b)
        prev_b = c(a, b - 1)
        arr = np.zeros(a * b + 1, dtype=np.int64)
        # largest pooled observation belongs to sample 1: it beats all b of
        # sample 2, adding b to U
        arr[b : b + prev_a.size] += prev_a
        # or it belongs to sample 2: U unchanged
        arr[: prev_b.size] += prev_b
        table[key] = arr
        return arr

    return c(n1, n2)


def mann_whitney_u(a, b, alternative="two_sided"):
    """Two-sided Mann-Whitney U test.

    Exact enumeration when both samples are tie-free and n1+n2 <= 16;
    otherwise the normal approximation with tie and continuity corrections.
    """
    if alternative != "two_sided":
        raise ValueError("only the two_sided alternative is supported")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise EmptyInput("mann_whitney_u requires two non-empty samples")

    u_a, ranks = _rank_sum(a, b)
    pooled = np.concatenate([a, b])
    tie_free = np.unique(pooled).size == pooled.size

    if tie_free and n1 + n2 <= EXACT_MWU_MAX_N:
        p = _exact_two_sided_p(u_a, n1, n2)
        return TestResult(statistic=float(u_a), p_value=min(p, 1.0),
                          method="exact", n1=n1, n2=n2)

    n = n1 + n2
    mean_u = n1 * n2 / 2.0
    # tie correction: sum of (t^3 - t) over tie groups of the pooled sample
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0.0:
        return TestResult(statistic=float(u_a), p_value=1.0,
                          method="normal_approx", n1=n1, n2=n2)
    z = (abs(u_a - mean_u) - 0.5) / sqrt(var_u)
    z = max(z, 0.0)
    p = erfc(z / sqrt(2.0))
    return TestResult(statistic=float(u_a), p_value=min(p, 1.0),
                      method="normal_approx", n1=n1, n2=n2)
