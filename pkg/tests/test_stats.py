import itertools
import math

import numpy as np
import pytest

from slicekit import stats
from slicekit.errors import EmptyInput, SingleClassInput


def brier_naive(scores, labels):
    total = 0.0
    for s, l in zip(scores, labels):
        total += (s - l) ** 2
    return total / len(scores)


def auroc_all_pairs(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def mwu_exact_enumeration(a, b):
    """Two-sided exact p by enumerating all C(n1+n2, n1) label assignments."""
    pooled = list(a) + list(b)
    n1, n2 = len(a), len(b)
    u_obs = sum(1 for x in a for y in b if x > y)
    t = min(u_obs, n1 * n2 - u_obs)
    hits = total = 0
    for idx in itertools.combinations(range(n1 + n2), n1):
        chosen = set(idx)
        aa = [pooled[i] for i in chosen]
        bb = [pooled[i] for i in range(n1 + n2) if i not in chosen]
        u = sum(1 for x in aa for y in bb if x > y)
        total += 1
        if min(u, n1 * n2 - u) <= t:
            hits += 1
    return hits / total


class TestBrier:
    def test_perfect_prediction(self):
        assert stats.brier([1.0], [1]) == 0.0

    def test_half_scores(self):
        assert stats.brier([0.5, 0.5], [0, 1]) == 0.25

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(1, 50)
            scores = rng.random(n)
            labels = rng.integers(0, 2, n)
            assert abs(stats.brier(scores, labels) - brier_naive(scores, labels)) < 1e-15

    def test_label_flip_symmetry(self):
        rng = np.random.default_rng(1)
        scores = rng.random(30)
        labels = rng.integers(0, 2, 30)
        assert stats.brier(scores, labels) == pytest.approx(
            stats.brier(1.0 - scores, 1 - labels), abs=1e-15
        )

    def test_empty(self):
        with pytest.raises(EmptyInput):
            stats.brier([], [])


class TestAuroc:
    def test_perfect_separation(self):
        assert stats.auroc([0.9, 0.8, 0.7, 0.1], [1, 1, 0, 0]) == 1.0

    def test_tie_half_credit(self):
        assert stats.auroc([0.5, 0.5], [1, 0]) == 0.5

    def test_matches_all_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            n = int(rng.integers(2, 21))
            labels = np.zeros(n, dtype=int)
            labels[: max(1, n // 2)] = 1
            rng.shuffle(labels)
            # quantized so ties actually occur
            scores = np.round(rng.random(n), 1)
            assert stats.auroc(scores, labels) == pytest.approx(
                auroc_all_pairs(scores, labels), abs=1e-12
            )

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        scores = rng.random(40)
        labels = rng.integers(0, 2, 40)
        labels[0], labels[1] = 0, 1
        base = stats.auroc(scores, labels)
        for transform in (np.exp, lambda s: 3.0 * s + 1.0, lambda s: s**3):
            assert stats.auroc(transform(scores), labels) == pytest.approx(base, abs=1e-12)

    def test_flip_complement(self):
        rng = np.random.default_rng(4)
        scores = rng.permutation(50) / 50.0  # tie-free
        labels = rng.integers(0, 2, 50)
        labels[0], labels[1] = 0, 1
        assert stats.auroc(scores, labels) + stats.auroc(scores, 1 - labels) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_single_class(self):
        with pytest.raises(SingleClassInput):
            stats.auroc([0.4, 0.6], [1, 1])


class TestMannWhitney:
    def test_spec_example(self):
        res = stats.mann_whitney_u([1, 2], [3, 4])
        assert res.statistic == 0.0
        assert res.method == "exact"
        assert res.p_value == pytest.approx(1 / 3, abs=1e-12)

    def test_identical_singletons(self):
        res = stats.mann_whitney_u([1.0], [1.0])
        assert res.statistic == 0.5
        assert res.p_value == 1.0

    def test_u_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.random(int(rng.integers(1, 12)))
            b = rng.random(int(rng.integers(1, 12)))
            res_a = stats.mann_whitney_u(a, b)
            res_b = stats.mann_whitney_u(b, a)
            assert res_a.statistic + res_b.statistic == pytest.approx(len(a) * len(b))
            assert res_a.p_value == pytest.approx(res_b.p_value, abs=1e-12)

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(6)
        for n1 in range(1, 6):
            for n2 in range(1, 11 - n1):
                a = list(rng.permutation(100)[:n1].astype(float))
                b = list(rng.permutation(100)[50 : 50 + n2].astype(float))
                if len(set(a) | set(b)) < n1 + n2:
                    continue
                res = stats.mann_whitney_u(a, b)
                assert res.method == "exact"
                assert res.p_value == pytest.approx(mwu_exact_enumeration(a, b), abs=1e-12)

    def test_normal_approx_used_for_large_or_tied(self):
        assert stats.mann_whitney_u(list(range(10)), list(range(10, 20))).method == "normal_approx"
        assert stats.mann_whitney_u([1, 1], [2, 3]).method == "normal_approx"

    def test_large_shift_significant(self):
        a = [0.90 + 0.001 * i for i in range(10)]
        b = [0.80 + 0.001 * i for i in range(10)]
        assert stats.mann_whitney_u(a, b).p_value < 0.001

    def test_empty(self):
        with pytest.raises(EmptyInput):
            stats.mann_whitney_u([], [1.0])


class TestQuantile:
    def test_median_interpolation(self):
        assert stats.empirical_quantile([1, 2, 3, 4], 0.5) == 2.5

    def test_extremes(self):
        values = [3.0, 1.0, 2.0]
        assert stats.empirical_quantile(values, 0.0) == 1.0
        assert stats.empirical_quantile(values, 1.0) == 3.0

    def test_monotone_in_q(self):
        rng = np.random.default_rng(7)
        values = rng.random(25)
        qs = np.linspace(0, 1, 21)
        out = [stats.empirical_quantile(values, q) for q in qs]
        assert all(x <= y + 1e-15 for x, y in zip(out, out[1:]))

    def test_empty(self):
        with pytest.raises(EmptyInput):
            stats.empirical_quantile([], 0.5)


class TestBootstrap:
    def test_constant_samples(self):
        out = stats.bootstrap_metric([0.3] * 5, [0] * 5, stats.brier, 200, seed=0)
        assert np.all(out == out[0])

    def test_deterministic(self):
        scores = np.linspace(0, 1, 30)
        labels = np.tile([0, 1], 15)
        a = stats.bootstrap_metric(scores, labels, stats.brier, 300, seed=42)
        b = stats.bootstrap_metric(scores, labels, stats.brier, 300, seed=42)
        assert np.array_equal(a, b)

    def test_mean_converges_to_point(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            n = int(rng.integers(50, 120))
            scores = rng.random(n)
            labels = rng.integers(0, 2, n)
            point = stats.brier(scores, labels)
            boots = stats.bootstrap_metric(scores, labels, stats.brier, 4000, seed=9)
            tol = 3.0 * (boots.std() / math.sqrt(len(boots)) + 1.0 / n)
            assert abs(boots.mean() - point) < tol
