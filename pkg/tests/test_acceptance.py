"""Acceptance suite: one test per release criterion.

Run with ``pytest -v tests/test_acceptance.py`` to get one pass/fail line
per criterion. Tolerances are part of the contract and are asserted
explicitly in each test.
"""

import itertools
import json
import time

import numpy as np
import pytest

from slicekit import audit, cli, dataio, gmm, reducer, slicer, stats, synth


# --------------------------------------------------------------------------
# Planted-slice recovery: N=5000, 32-dim embeddings, a planted slice with
# error rate 0.4 against a 0.05 background; the worst-ranked slice must
# reach Jaccard >= 0.8 against the planted members in >= 9/10 seeds, with
# the whole sweep under 120 s.
# --------------------------------------------------------------------------
def _planted_trial(seed):
    rng = np.random.default_rng(1000 + seed)
    dim = 32
    centers = rng.normal(0, 2.0, size=(3, dim))
    spec = synth.PlantedSpec(dim=dim, seed=seed, clusters=[
        synth.PlantedCluster(centers[0], 0.5, 2000, label=1, error_rate=0.05),
        synth.PlantedCluster(centers[1], 0.5, 500, label=1, error_rate=0.4),
        synth.PlantedCluster(centers[2], 0.5, 2500, label=0, error_rate=0.05),
    ])
    ds, membership = synth.generate_planted(spec)
    train_idx, _, test_idx = dataio.make_split(ds, dataio.SplitSpec(seed=seed))
    report = slicer.run_sdm(
        ds, train_idx, test_idx,
        reducer.TrainConfig(d=8, epochs=5, learning_rate=1e-3,
                            weight_init_scale=0.3, seed=seed),
        gmm.FitConfig(k_min=1, k_max=3, n_restarts=5, seed=seed),
        slicer.BootstrapConfig(seed=seed),
    )
    pos = report["strata"]["positive"]
    worst = next(s for s in pos["slices"] if s["cluster"] == pos["worst"])
    truth = set(membership[1]) & set(report["eval_sample_ids"])
    return synth.recovery_score(worst["member_sample_ids"], truth).jaccard


def test_planted_slice_recovery():
    t0 = time.monotonic()
    jaccards = [_planted_trial(seed) for seed in range(10)]
    elapsed = time.monotonic() - t0
    n_pass = sum(j >= 0.8 for j in jaccards)
    assert n_pass >= 9, f"only {n_pass}/10 seeds reached Jaccard >= 0.8: {jaccards}"
    assert elapsed < 120.0, f"recovery sweep took {elapsed:.1f}s"


# --------------------------------------------------------------------------
# Shortcut gap analog: shortcut prevalence 0.50 vs 0.40 among positives
# must produce a significant AUROC gap (p < 0.05) that vanishes
# (p > 0.1) after balanced resampling, in >= 8/10 generator seeds.
# --------------------------------------------------------------------------
def test_shortcut_gap_closes_after_balancing():
    ok_unbalanced = ok_balanced = 0
    for gseed in range(10):
        spec = synth.ShortcutSpec(
            group_sizes={"M": 1000, "F": 1000},
            prevalence={("M", 1): 0.5, ("F", 1): 0.4,
                        ("M", 0): 0.4, ("F", 0): 0.4},
            seed=gseed,
        )
        ds = synth.generate_shortcut(spec)
        vals = {"M": [], "F": []}
        bvals = {"M": [], "F": []}
        for sseed in range(10):
            _, _, test_idx = dataio.make_split(ds, dataio.SplitSpec(seed=sseed))
            for r in audit.group_metric(ds, test_idx, "sex", "auroc"):
                vals[r.group].append(r.value)
            plan = audit.balanced_resample(ds, test_idx, "sex", "shortcut", sseed)
            for r in audit.group_metric(ds, plan.kept_indices, "sex", "auroc"):
                bvals[r.group].append(r.value)
        ok_unbalanced += audit.gap_significance(vals["M"], vals["F"]).p_value < 0.05
        ok_balanced += audit.gap_significance(bvals["M"], bvals["F"]).p_value > 0.1
    assert ok_unbalanced >= 8, f"unbalanced gap significant in {ok_unbalanced}/10"
    assert ok_balanced >= 8, f"balanced gap vanished in {ok_balanced}/10"


# --------------------------------------------------------------------------
# BIC order selection: well-separated mixtures with true k in {1, 2, 3}
# recovered in >= 9/10 seeds per case.
# --------------------------------------------------------------------------
def test_bic_recovers_true_k():
    for true_k in (1, 2, 3):
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(100 * true_k + seed)
            centers = np.arange(true_k)[:, None] * 8.0 + rng.normal(0, 1.0, (true_k, 2))
            X = np.concatenate(
                [rng.normal(c, 0.6, size=(200, 2)) for c in centers]
            )
            model, _ = gmm.select_k(X, gmm.FitConfig(k_min=1, k_max=5, seed=seed))
            hits += model.k == true_k
        assert hits >= 9, f"true k={true_k} recovered in only {hits}/10 seeds"


# --------------------------------------------------------------------------
# EM correctness: monotone log-likelihood (slack 1e-8) on 100 random
# instances, responsibility rows sum to 1 within 1e-9, and the k=1 fit
# matches the closed-form Gaussian MLE within 1e-9.
# --------------------------------------------------------------------------
def test_em_correctness():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(10, 80))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        X = rng.standard_normal((n, d)) * rng.uniform(0.5, 2.0)
        trace = []
        _, resp, _ = gmm.em_fit(
            X, k, gmm.FitConfig(n_restarts=2, max_iter=60, seed=0), rng, trace=trace
        )
        for run in trace:
            drops = [a - b for a, b in zip(run, run[1:]) if b < a - 1e-8]
            assert not drops, f"log-likelihood dropped by {max(drops)}"
        assert np.all(np.abs(resp.sum(axis=1) - 1.0) < 1e-9)

    X = np.random.default_rng(1).standard_normal((300, 3)) * 2.0 + 1.0
    model, _, _ = gmm.em_fit(
        X, 1, gmm.FitConfig(k_min=1, n_restarts=1), np.random.default_rng(2)
    )
    assert np.max(np.abs(model.means[0] - X.mean(axis=0))) < 1e-9
    assert np.max(np.abs(model.variances[0] - X.var(axis=0))) < 1e-9


# --------------------------------------------------------------------------
# Gradient check: analytic head gradients match central finite differences
# with max relative error < 1e-4 on 50 random instances (N<=32, D<=16, d<=4).
# --------------------------------------------------------------------------
def test_gradient_check():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 33))
        D = int(rng.integers(1, 17))
        d = int(rng.integers(1, 5))
        head = reducer.HeadModel(
            w1=rng.standard_normal((d, D)) * 0.5,
            b1=rng.standard_normal(d) * 0.1,
            w2=rng.standard_normal(d) * 0.5,
            b2=float(rng.standard_normal() * 0.1),
        )
        X = rng.standard_normal((n, D))
        y = rng.integers(0, 2, n).astype(float)
        worst = max(worst, reducer.gradient_check(head, X, y, epsilon=1e-5))
    assert worst < 1e-4, f"max relative gradient error {worst:.2e}"


# --------------------------------------------------------------------------
# Statistics oracles: brier vs naive loop (1e-15), auroc vs all-pairs brute
# force for n <= 20 (1e-12), exact Mann-Whitney p vs exhaustive enumeration
# for all tie-free n1+n2 <= 10 including {1,2} vs {3,4} -> 1/3.
# --------------------------------------------------------------------------
def test_statistics_oracles():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(1, 40))
        scores = rng.random(n)
        labels = rng.integers(0, 2, n)
        naive = sum((s - l) ** 2 for s, l in zip(scores, labels)) / n
        assert abs(stats.brier(scores, labels) - naive) < 1e-15

    for _ in range(30):
        n = int(rng.integers(2, 21))
        labels = np.zeros(n, dtype=int)
        labels[: max(1, n // 2)] = 1
        rng.shuffle(labels)
        scores = np.round(rng.random(n), 1)  # force ties
        pos = scores[labels == 1]
        neg = scores[labels == 0]
        wins = sum(
            1.0 if p > q else (0.5 if p == q else 0.0)
            for p in pos for q in neg
        )
        brute = wins / (pos.size * neg.size)
        assert abs(stats.auroc(scores, labels) - brute) < 1e-12

    res = stats.mann_whitney_u([1, 2], [3, 4])
    assert res.method == "exact"
    assert abs(res.p_value - 1 / 3) < 1e-12

    for n1 in range(1, 10):
        for n2 in range(1, 11 - n1):
            a = list(rng.permutation(1000)[:n1].astype(float))
            b = list(rng.permutation(1000)[500:500 + n2].astype(float))
            if len(set(a) | set(b)) < n1 + n2:
                continue
            res = stats.mann_whitney_u(a, b)
            assert res.method == "exact"
            pooled = a + b
            u_obs = sum(1 for x in a for y in b if x > y)
            t = min(u_obs, n1 * n2 - u_obs)
            hits = total = 0
            for pick in itertools.combinations(range(n1 + n2), n1):
                chosen = set(pick)
                u = sum(
                    1
                    for i in chosen
                    for j in range(n1 + n2)
                    if j not in chosen and pooled[i] > pooled[j]
                )
                total += 1
                hits += min(u, n1 * n2 - u) <= t
            assert abs(res.p_value - hits / total) < 1e-12


# --------------------------------------------------------------------------
# Ranking rule conformance: with constant-confidence clusters the bootstrap
# distribution is a point mass, so best (lowest upper quantile) and worst
# (highest lower quantile) are fully hand-computable.
# --------------------------------------------------------------------------
def test_ranking_rule_conformance():
    values = [0.95, 0.55, 0.35, 0.75]  # all-positive clusters, 15 samples each
    assignment = slicer.SliceAssignment(
        stratum=slicer.POSITIVE,
        sample_indices=np.arange(60),
        clusters=np.repeat(np.arange(4), 15),
        k=4,
    )
    conf = np.repeat(values, 15)
    lab = np.ones(60, dtype=int)
    ranking = slicer.score_slices(
        assignment, conf, lab, slicer.BootstrapConfig(n_boot=500, seed=0)
    )
    briers = [(v - 1.0) ** 2 for v in values]
    for s, expected in zip(ranking.slices, briers):
        assert s.q_low == pytest.approx(expected, abs=1e-15)
        assert s.q_high == pytest.approx(expected, abs=1e-15)
    # brier per cluster: 0.0025, 0.2025, 0.4225, 0.0625
    assert ranking.best == (slicer.POSITIVE, 0)
    assert ranking.worst == (slicer.POSITIVE, 2)


# --------------------------------------------------------------------------
# Determinism: cmd_sdm and cmd_audit rerun byte-identically with the same
# config and seed, and --jobs 8 output equals serial output.
# --------------------------------------------------------------------------
SHORTCUT_TOML = """\
kind = "shortcut"
dim = 8
seed = 0

[groups]
M = 200
F = 200

[prevalence]
"M,0" = 0.4
"M,1" = 0.5
"F,0" = 0.4
"F,1" = 0.4
"""

RUN_TOML = """\
seed = 0

[paths]
embeddings = "{d}/embeddings.sdm1"
metadata = "{d}/metadata.csv"
schema = "{d}/schema.json"
output = "{out}"

[split]
n_resamples = 3

[train]
d = 4
epochs = 3
weight_init_scale = 0.3

[fit]
k_min = 1
k_max = 2
n_restarts = 2

[bootstrap]
n_boot = 200

[audit]
group_attr = "sex"
balance_attr = "shortcut"
metric = "auroc"
composition_attrs = ["sex", "shortcut"]
confidence_attrs = ["shortcut"]
"""


def test_cli_determinism(tmp_path):
    bundle = tmp_path / "bundle"
    bundle.mkdir()
    spec = bundle / "spec.toml"
    spec.write_text(SHORTCUT_TOML)
    assert cli.main(["synth", "--spec", str(spec), "--output", str(bundle)]) == 0

    outs = {name: tmp_path / name for name in ("a", "b", "par")}
    config = tmp_path / "run.toml"
    config.write_text(RUN_TOML.format(d=bundle, out=outs["a"]))

    assert cli.main(["sdm", "--config", str(config)]) == 0
    assert cli.main(["sdm", "--config", str(config), "--output", str(outs["b"])]) == 0
    assert cli.main(
        ["sdm", "--config", str(config), "--jobs", "8", "--output", str(outs["par"])]
    ) == 0
    names = [f"sdm_seed{s:04d}.json" for s in range(3)] + ["sdm_aggregate.json"]
    for name in names:
        serial = (outs["a"] / name).read_bytes()
        assert (outs["b"] / name).read_bytes() == serial, f"{name} rerun differs"
        assert (outs["par"] / name).read_bytes() == serial, f"{name} parallel differs"

    for out in ("a", "b"):
        assert cli.main(
            ["audit", "--config", str(config), "--report", str(outs["a"]),
             "--output", str(outs[out])]
        ) == 0
    assert (outs["a"] / "audit.json").read_bytes() == (outs["b"] / "audit.json").read_bytes()


# --------------------------------------------------------------------------
# Partition additivity: the stratum-pooled Brier score equals the
# size-weighted mean of per-slice Brier scores within 1e-12.
# --------------------------------------------------------------------------
def test_partition_additivity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(30, 200))
        k = int(rng.integers(1, 6))
        conf = rng.random(n)
        lab = rng.integers(0, 2, n)
        clusters = rng.integers(0, k, n)
        pooled = stats.brier(conf, lab)
        weighted = sum(
            (clusters == c).sum() * stats.brier(conf[clusters == c], lab[clusters == c])
            for c in range(k)
            if (clusters == c).any()
        ) / n
        assert abs(pooled - weighted) < 1e-12
