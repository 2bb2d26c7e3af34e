"""End-to-end slice discovery: stratify by label, reduce, cluster, rank.

Clusters are scored by bootstrapped Brier quantiles; within each stratum the
best slice has the lowest upper quantile and the worst slice the highest
lower quantile.
"""

import hashlib
import json
from dataclasses import dataclass, asdict, field

import numpy as np

from . import gmm, reducer, stats
from .dataio import Dataset, EmbeddingMatrix
from .errors import EmptyCluster, EmptyStratum

# Clusters below this size are reported but not eligible for best/worst.
MIN_ELIGIBLE_SIZE = 10

POSITIVE, NEGATIVE = "positive", "negative"


@dataclass(frozen=True)
class BootstrapConfig:
    n_boot: int = 1000
    lower_q: float = 0.025
    upper_q: float = 0.975
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.lower_q < self.upper_q < 1.0:
            raise ValueError("need 0 < lower_q < upper_q < 1")
        if self.n_boot < 100:
            raise ValueError("n_boot must be >= 100")


@dataclass
class SliceAssignment:
    stratum: str  # "positive" or "negative"
    sample_indices: np.ndarray  # indices into the dataset
    clusters: np.ndarray  # cluster id per entry of sample_indices
    k: int
    model: gmm.GmmModel | None = None


@dataclass
class SliceScore:
    stratum: str
    cluster: int
    size: int
    brier_point: float
    q_low: float
    q_high: float
    eligible: bool
    member_indices: list[int] = field(default_factory=list)


@dataclass
class SliceRanking:
    slices: list[SliceScore]
    best: tuple[str, int] | None  # (stratum, cluster id)
    worst: tuple[str, int] | None


def discover_slices(dataset, head, fit_cfg):
    """Reduce, split by label, and cluster each stratum with BIC-chosen k."""
    reduced = reducer.reduce(dataset.embeddings.values, head)
    labels = dataset.labels
    out = []
    for stratum, label in ((POSITIVE, 1), (NEGATIVE, 0)):
        idx = np.flatnonzero(labels == label)
        if idx.size < fit_cfg.k_min:
            raise EmptyStratum(
                f"{stratum} stratum has {idx.size} samples, fewer than k_min={fit_cfg.k_min}"
            )
        stratum_cfg = gmm.FitConfig(**{**asdict(fit_cfg), "seed": _stratum_seed(fit_cfg.seed, label)})
        model, resp = gmm.select_k(reduced[idx], stratum_cfg)
        clusters = gmm.hard_assign(resp)
        out.append(
            SliceAssignment(
                stratum=stratum,
                sample_indices=idx,
                clusters=clusters,
                k=model.k,
                model=model,
            )
        )
    return out[0], out[1]


def _stratum_seed(seed, label):
    return int(np.random.SeedSequence([seed, label]).generate_state(1)[0])


def _cluster_seed(seed, stratum, cluster):
    code = 1 if stratum == POSITIVE else 0
    return np.random.SeedSequence([seed, code, cluster])


def score_slices(assignment, confidences, labels, cfg):
    """Bootstrap Brier quantiles per cluster of one stratum."""
    confidences = np.asarray(confidences, dtype=float)
    labels = np.asarray(labels)
    scores = []
    for cluster in range(assignment.k):
        members = assignment.sample_indices[assignment.clusters == cluster]
        if members.size == 0:
            raise EmptyCluster(f"{assignment.stratum} cluster {cluster} is empty")
        conf = confidences[members]
        lab = labels[members]
        point = stats.brier(conf, lab)
        boots = stats.bootstrap_metric(
            conf, lab, stats.brier, cfg.n_boot,
            _cluster_seed(cfg.seed, assignment.stratum, cluster),
        )
        scores.append(
            SliceScore(
                stratum=assignment.stratum,
                cluster=cluster,
                size=int(members.size),
                brier_point=point,
                q_low=stats.empirical_quantile(boots, cfg.lower_q),
                q_high=stats.empirical_quantile(boots, cfg.upper_q),
                eligible=members.size >= MIN_ELIGIBLE_SIZE,
                member_indices=[int(i) for i in members],
            )
        )
    return rank_slices(scores)


def rank_slices(scores):
    """Best = lowest upper quantile, worst = highest lower quantile, among
    eligible slices; ties go to the smaller cluster id."""
    eligible = [s for s in scores if s.eligible]
    best = worst = None
    if eligible:
        best_s = min(eligible, key=lambda s: (s.q_high, s.cluster))
        worst_s = max(eligible, key=lambda s: (s.q_low, -s.cluster))
        best = (best_s.stratum, best_s.cluster)
        worst = (worst_s.stratum, worst_s.cluster)
    return SliceRanking(slices=scores, best=best, worst=worst)


def dataset_fingerprint(dataset):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.embeddings.values, dtype="<f4").tobytes())
    for r in dataset.records:
        h.update(
            f"{r.sample_id}\x1f{r.patient_id}\x1f{r.label}\x1f{r.confidence!r}\x1f"
            f"{json.dumps(r.attributes, sort_keys=True)}\n".encode()
        )
    return h.hexdigest()


def run_sdm(dataset, train_idx, eval_idx, train_cfg, fit_cfg, boot_cfg):
    """Train the reduction head on the train split, then discover and score
    slices on the eval split. Returns a JSON-serializable report dict."""
    train_idx = np.asarray(train_idx, dtype=int)
    eval_idx = np.asarray(eval_idx, dtype=int)
    if np.intersect1d(train_idx, eval_idx).size:
        raise ValueError("train and eval indices overlap")

    X = dataset.embeddings.values
    y = dataset.labels
    head, losses = reducer.train_head(X[train_idx], y[train_idx], train_cfg)

    eval_records = [dataset.records[i] for i in sorted(eval_idx)]
    eval_emb = X[np.array(sorted(eval_idx))]
    eval_ds = Dataset(
        records=eval_records,
        embeddings=EmbeddingMatrix(
            values=eval_emb, sample_ids=[r.sample_id for r in eval_records]
        ),
        attribute_schema=dataset.attribute_schema,
    )
    pos, neg = discover_slices(eval_ds, head, fit_cfg)
    conf = eval_ds.confidences
    lab = eval_ds.labels
    rankings = {
        POSITIVE: score_slices(pos, conf, lab, boot_cfg),
        NEGATIVE: score_slices(neg, conf, lab, boot_cfg),
    }

    report = {
        "fingerprint": dataset_fingerprint(dataset),
        "configs": {
            "train": asdict(train_cfg),
            "fit": asdict(fit_cfg),
            "bootstrap": asdict(boot_cfg),
        },
        "train_loss": {"initial": losses[0], "final": losses[-1]},
        "eval_sample_ids": [r.sample_id for r in eval_records],
        "strata": {},
    }
    for stratum, ranking in rankings.items():
        report["strata"][stratum] = {
            "k": len(ranking.slices),
            "slices": [
                {
                    "cluster": s.cluster,
                    "size": s.size,
                    "member_sample_ids": [
                        eval_ds.records[eval_ds_index].sample_id
                        for eval_ds_index in s.member_indices
                    ],
                    "brier_point": s.brier_point,
                    "q_low": s.q_low,
                    "q_high": s.q_high,
                    "eligible": s.eligible,
                }
                for s in ranking.slices
            ],
            "best": None if ranking.best is None else ranking.best[1],
            "worst": None if ranking.worst is None else ranking.worst[1],
        }
    return report


def report_to_json(report):
    """Canonical byte-stable JSON encoding of an SDM report."""
    return json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
