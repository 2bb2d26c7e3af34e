"""Synthetic dataset generators with known ground truth.

Planted scenarios carry labeled clusters with per-cluster error rates;
shortcut scenarios give two groups different prevalences of a
confidence-driving attribute, reproducing the mechanics of a shortcut-driven
group gap at desk scale. Output uses the same Dataset/SDM1/CSV contracts as
the loaders, so every pipeline runs unchanged on synthetic data.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataio import Dataset, EmbeddingMatrix, SampleRecord
from .errors import InvalidSpec


@dataclass
class PlantedCluster:
    center: np.ndarray | float
    scale: float
    size: int
    label: int
    error_rate: float


@dataclass
class PlantedSpec:
    dim: int
    clusters: list[PlantedCluster]
    seed: int = 0
    confidence_noise: float = 0.05

    @property
    def n_samples(self):
        return sum(c.size for c in self.clusters)

    def validate(self):
        if self.dim < 1 or not self.clusters:
            raise InvalidSpec("dim >= 1 and at least one cluster required")
        for c in self.clusters:
            if c.size < 1 or not 0.0 <= c.error_rate <= 1.0 or c.label not in (0, 1):
                raise InvalidSpec(f"bad cluster spec: {c}")


@dataclass
class ShortcutSpec:
    group_sizes: dict[str, int]  # e.g. {"M": 1000, "F": 1000}
    # shortcut prevalence per (group, label)
    prevalence: dict[tuple[str, int], float] = field(default_factory=dict)
    # base confidence per (label, shortcut present?)
    # shortcut presence dominates the confidence, as in shortcut learning
    confidence_base: dict[tuple[int, bool], float] = field(
        default_factory=lambda: {(1, True): 0.9, (1, False): 0.3,
                                 (0, True): 0.7, (0, False): 0.1}
    )
    positive_rate: float = 0.5
    confidence_noise: float = 0.1
    dim: int = 8
    separation: float = 4.0
    seed: int = 0

    def validate(self):
        if not self.group_sizes or len(self.group_sizes) != 2:
            raise InvalidSpec("exactly two groups required")
        for p in self.prevalence.values():
            if not 0.0 <= p <= 1.0:
                raise InvalidSpec("prevalences must be in [0, 1]")
        for b in self.confidence_base.values():
            if not 0.0 <= b <= 1.0:
                raise InvalidSpec("confidence cells must be in [0, 1]")


@dataclass
class RecoveryScore:
    jaccard: float
    precision: float
    recall: float


def _truncnorm01(rng, mean, sd, size=None):
    # clamped Gaussian; keeps confidences in [0, 1]
    return np.clip(rng.normal(mean, sd, size=size), 0.0, 1.0)


def _confidence(rng, label, correct, noise):
    target = label if correct else 1 - label
    base = 0.95 if target == 1 else 0.05
    return float(_truncnorm01(rng, base, noise))


def generate_planted(spec):
    """Gaussian blobs with per-cluster error rates.

    Returns (Dataset, membership) where membership maps cluster index to the
    list of its sample_ids.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    rows, records = [], []
    membership = {}
    i = 0
    for ci, cluster in enumerate(spec.clusters):
        center = np.asarray(cluster.center, dtype=float)
        if center.ndim == 0:
            center = np.full(spec.dim, float(center))
        if center.shape != (spec.dim,):
            raise InvalidSpec(f"cluster {ci} center has shape {center.shape}")
        members = []
        for _ in range(cluster.size):
            rows.append(center + cluster.scale * rng.standard_normal(spec.dim))
            correct = rng.random() >= cluster.error_rate
            sid = f"s{i:06d}"
            records.append(
                SampleRecord(
                    sample_id=sid,
                    patient_id=f"p{i:06d}",
                    label=cluster.label,
                    confidence=_confidence(rng, cluster.label, correct,
                                           spec.confidence_noise),
                    attributes={"planted_cluster": str(ci)},
                )
            )
            members.append(sid)
            i += 1
        membership[ci] = members
    schema = {"planted_cluster": [str(c) for c in range(len(spec.clusters))]}
    emb = EmbeddingMatrix(
        values=np.asarray(rows, dtype=np.float32).astype(np.float64),
        sample_ids=[r.sample_id for r in records],
    )
    return Dataset(records=records, embeddings=emb, attribute_schema=schema), membership


def generate_shortcut(spec):
    """Two-group dataset where a shortcut attribute drives confidence and its
    prevalence differs by group."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    # distinct embedding centers per (label, shortcut) cell so the shortcut
    # structure is discoverable in representation space
    corners = {
        (0, False): np.zeros(spec.dim),
        (0, True): np.eye(spec.dim)[0] * spec.separation,
        (1, False): np.eye(spec.dim)[min(1, spec.dim - 1)] * spec.separation,
        (1, True): (np.eye(spec.dim)[0] + np.eye(spec.dim)[min(1, spec.dim - 1)])
        * spec.separation,
    }
    # assign labels, then give each (group, label) cell its exact shortcut
    # count so realized prevalence matches the spec up to rounding
    assignments = []
    for group in sorted(spec.group_sizes):
        labels = (rng.random(spec.group_sizes[group]) < spec.positive_rate).astype(int)
        for label in (0, 1):
            cell_n = int((labels == label).sum())
            prev = spec.prevalence.get((group, label), 0.5)
            n_present = int(round(prev * cell_n))
            flags = np.zeros(cell_n, dtype=bool)
            flags[rng.permutation(cell_n)[:n_present]] = True
            assignments.extend(
                (group, label, bool(f)) for f in flags
            )
    rows, records = [], []
    i = 0
    for group, label, shortcut in assignments:
        base = spec.confidence_base[(label, shortcut)]
        conf = float(_truncnorm01(rng, base, spec.confidence_noise))
        rows.append(
            corners[(label, shortcut)] + rng.standard_normal(spec.dim)
        )
        records.append(
            SampleRecord(
                sample_id=f"s{i:06d}",
                patient_id=f"p{i:06d}",
                label=label,
                confidence=conf,
                attributes={
                    "sex": group,
                    "shortcut": "present" if shortcut else "absent",
                },
            )
        )
        i += 1
    schema = {
        "sex": sorted(spec.group_sizes),
        "shortcut": ["present", "absent"],
    }
    emb = EmbeddingMatrix(
        values=np.asarray(rows, dtype=np.float32).astype(np.float64),
        sample_ids=[r.sample_id for r in records],
    )
    return Dataset(records=records, embeddings=emb, attribute_schema=schema)


def recovery_score(predicted, truth):
    """Jaccard / precision / recall between a predicted and true member set."""
    predicted = set(predicted)
    truth = set(truth)
    inter = len(predicted & truth)
    union = len(predicted | truth)
    return RecoveryScore(
        jaccard=inter / union if union else 1.0,
        precision=inter / len(predicted) if predicted else 0.0,
        recall=inter / len(truth) if truth else 0.0,
    )
