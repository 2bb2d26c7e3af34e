"""Group-gap audits: per-group metrics, shortcut-balanced resampling,
gap significance, slice composition and confidence summaries."""

from dataclasses import dataclass

import numpy as np

from . import stats
from .dataio import UNKNOWN
from .errors import (
    DegenerateGroup,
    EmptyInput,
    SingleClassInput,
    UnknownAttribute,
    UnknownSampleId,
)


@dataclass
class GroupMetricRow:
    group: str
    metric: str
    value: float | None
    n: int
    reason: str | None = None


@dataclass
class BalancePlan:
    kept_indices: list[int]
    targets: dict[tuple[int, str], float]  # (label, group) -> target prevalence
    n_excluded_unknown: int
    seed: int


def _check_attr(dataset, attr):
    if attr not in dataset.attribute_schema:
        raise UnknownAttribute(attr)


def group_metric(dataset, indices, group_attr, metric):
    """Per-group metric table over the given sample indices.

    Groups whose preconditions fail (e.g. a single class for AUROC) get a
    null value with the reason recorded.
    """
    _check_attr(dataset, group_attr)
    if metric not in ("auroc", "brier"):
        raise ValueError(f"unknown metric {metric!r}")
    indices = np.asarray(indices, dtype=int)
    values = {"auroc": stats.auroc, "brier": stats.brier}[metric]

    groups = {}
    for i in indices:
        r = dataset.records[i]
        groups.setdefault(r.attributes.get(group_attr, UNKNOWN), []).append(i)

    rows = []
    conf = dataset.confidences
    lab = dataset.labels
    for group in sorted(groups):
        idx = np.array(groups[group])
        try:
            value = values(conf[idx], lab[idx])
            rows.append(GroupMetricRow(group, metric, value, idx.size))
        except (SingleClassInput, EmptyInput) as exc:
            rows.append(
                GroupMetricRow(group, metric, None, idx.size,
                               reason=type(exc).__name__)
            )
    return rows


def _keep_count(n_present, n_absent, target):
    """Present-sample count whose prevalence lands closest to target."""
    if target >= 1.0:
        return n_present
    return min(
        range(n_present + 1),
        key=lambda m: (abs(m / (m + n_absent) - target), m),
    )


def balanced_resample(dataset, indices, group_attr, balance_attr, seed,
                      present_value="present"):
    """Equalize the balance attribute's prevalence across groups.

    Within each label stratum the target is the minimum group prevalence of
    ``balance_attr == present_value``; higher-prevalence groups have their
    attribute-present samples uniformly downsampled. Attribute-absent samples
    are always kept; samples with an unknown balance attribute are excluded.
    """
    _check_attr(dataset, group_attr)
    _check_attr(dataset, balance_attr)
    rng = np.random.default_rng(seed)
    indices = np.asarray(indices, dtype=int)

    cells = {}  # (label, group) -> {"present": [...], "absent": [...]}
    n_unknown = 0
    for i in indices:
        r = dataset.records[i]
        bval = r.attributes.get(balance_attr, UNKNOWN)
        if bval == UNKNOWN:
            n_unknown += 1
            continue
        cell = cells.setdefault(
            (r.label, r.attributes.get(group_attr, UNKNOWN)),
            {"present": [], "absent": []},
        )
        cell["present" if bval == present_value else "absent"].append(int(i))

    kept = []
    targets = {}
    for label in sorted({lab for lab, _ in cells}):
        stratum = {g: c for (lab, g), c in cells.items() if lab == label}
        for group, cell in stratum.items():
            if not cell["absent"]:
                raise DegenerateGroup(
                    f"group {group!r} has no attribute-absent samples in label={label}"
                )
        prevalence = {
            g: len(c["present"]) / (len(c["present"]) + len(c["absent"]))
            for g, c in stratum.items()
        }
        target = min(prevalence.values())
        for group in sorted(stratum):
            cell = stratum[group]
            targets[(label, group)] = target
            kept.extend(cell["absent"])
            m = _keep_count(len(cell["present"]), len(cell["absent"]), target)
            if m >= len(cell["present"]):
                kept.extend(cell["present"])
            else:
                chosen = rng.choice(len(cell["present"]), size=m, replace=False)
                kept.extend(cell["present"][j] for j in sorted(chosen))
    return BalancePlan(
        kept_indices=sorted(kept),
        targets=targets,
        n_excluded_unknown=n_unknown,
        seed=seed,
    )


def gap_significance(metrics_group1, metrics_group2):
    """Two-sided Mann-Whitney U on per-seed metric values of two groups."""
    return stats.mann_whitney_u(metrics_group1, metrics_group2)


def slice_composition(dataset, member_ids, attrs):
    """Per attribute: counts and prevalences over the slice members,
    including the unknown value. Prevalences sum to 1 per attribute."""
    index = dataset.index_of()
    members = []
    for sid in member_ids:
        if sid not in index:
            raise UnknownSampleId(sid)
        members.append(dataset.records[index[sid]])

    table = {}
    for attr in attrs:
        _check_attr(dataset, attr)
        vocab = list(dataset.attribute_schema[attr])
        if UNKNOWN not in vocab:
            vocab.append(UNKNOWN)
        counts = {v: 0 for v in vocab}
        for r in members:
            value = r.attributes.get(attr, UNKNOWN)
            counts[value if value in counts else UNKNOWN] += 1
        total = max(len(members), 1)
        table[attr] = {
            v: {"count": c, "prevalence": c / total} for v, c in counts.items()
        }
    return table


def confidence_by_attribute(dataset, indices, attrs):
    """Distribution summary (n, mean, median, quartiles) of confidence per
    attribute value. Empty cells are reported with n=0."""
    indices = np.asarray(indices, dtype=int)
    conf = dataset.confidences
    out = {}
    for attr in attrs:
        _check_attr(dataset, attr)
        vocab = list(dataset.attribute_schema[attr])
        if UNKNOWN not in vocab:
            vocab.append(UNKNOWN)
        cells = {v: [] for v in vocab}
        for i in indices:
            value = dataset.records[i].attributes.get(attr, UNKNOWN)
            cells[value if value in cells else UNKNOWN].append(conf[i])
        out[attr] = {}
        for value, xs in cells.items():
            if not xs:
                out[attr][value] = {"n": 0}
                continue
            arr = np.array(xs)
            out[attr][value] = {
                "n": int(arr.size),
                "mean": float(arr.mean()),
                "median": float(np.median(arr)),
                "q1": float(np.quantile(arr, 0.25)),
                "q3": float(np.quantile(arr, 0.75)),
            }
    return out
