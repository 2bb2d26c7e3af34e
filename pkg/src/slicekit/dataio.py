"""Dataset contract: SDM1 embedding files, metadata CSV, dedup and splits.

The SDM1 file layout is: magic b"SDM1", u32 N, u32 D (little-endian),
N*D float32 little-endian row-major, then N sample ids as newline-terminated
UTF-8 lines. Embeddings are float32 on disk and promoted to float64 in
memory; writing back a loaded file is byte-identical.
"""

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadLabel,
    BadMagic,
    ConfidenceOutOfRange,
    DuplicateSampleId,
    MissingColumn,
    NonFiniteValue,
    TooFewSamples,
    TrailingBytes,
    TruncatedFile,
    UnjoinedSample,
)

MAGIC = b"SDM1"
HEADER = struct.Struct("<4sII")

UNKNOWN = "unknown"

REQUIRED_COLUMNS = ("sample_id", "patient_id", "label", "confidence")


@dataclass
class EmbeddingMatrix:
    values: np.ndarray  # (n_samples, dim) float64
    sample_ids: list[str]

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


@dataclass
class SampleRecord:
    sample_id: str
    patient_id: str
    label: int
    confidence: float
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass
class Dataset:
    records: list[SampleRecord]
    embeddings: EmbeddingMatrix
    attribute_schema: dict[str, list[str]]

    def __post_init__(self):
        if len(self.records) != self.embeddings.n_samples:
            raise ValueError(
                f"{len(self.records)} records vs {self.embeddings.n_samples} embeddings"
            )

    @property
    def labels(self):
        return np.array([r.label for r in self.records], dtype=np.int64)

    @property
    def confidences(self):
        return np.array([r.confidence for r in self.records], dtype=float)

    def index_of(self):
        return {r.sample_id: i for i, r in enumerate(self.records)}


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.1
    test_frac: float = 0.3
    seed: int = 0
    stratify_by: str | None = None

    def __post_init__(self):
        for f in (self.train_frac, self.val_frac, self.test_frac):
            if not 0.0 < f < 1.0:
                raise ValueError(f"split fraction {f} outside (0, 1)")
        if abs(self.train_frac + self.val_frac + self.test_frac - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


def load_embeddings(path):
    """Read an SDM1 file; rejects bad magic, truncation, trailing bytes, NaN/Inf."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise TruncatedFile(path, len(data), HEADER.size - len(data))
    magic, n, d = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(path, 0, magic)
    if n < 1 or d < 1:
        raise TruncatedFile(path, 4, 1)
    body_end = HEADER.size + 4 * n * d
    if len(data) < body_end:
        raise TruncatedFile(path, len(data), body_end - len(data))
    raw = np.frombuffer(data, dtype="<f4", count=n * d, offset=HEADER.size)
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        raise NonFiniteValue(path, HEADER.size + 4 * int(bad[0]))
    tail = data[body_end:]
    if not tail.endswith(b"\n"):
        raise TruncatedFile(path, len(data), 1)
    lines = tail[:-1].split(b"\n")
    if len(lines) != n:
        if len(lines) < n:
            raise TruncatedFile(path, len(data), n - len(lines))
        raise TrailingBytes(path, body_end, len(tail))
    sample_ids = [ln.decode("utf-8") for ln in lines]
    values = raw.astype(np.float64).reshape(n, d)
    return EmbeddingMatrix(values=values, sample_ids=sample_ids)


def save_embeddings(path, emb):
    """Write an SDM1 file (float32 on disk)."""
    n, d = emb.values.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, d))
        fh.write(np.ascontiguousarray(emb.values, dtype="<f4").tobytes())
        for sid in emb.sample_ids:
            fh.write(sid.encode("utf-8") + b"\n")


def load_metadata(path, schema):
    """Parse metadata CSV into SampleRecords.

    Extra columns become attributes. Values outside the schema vocabulary map
    to "unknown"; the count of such replacements is returned alongside.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(col)
        attr_cols = [c for c in header if c not in REQUIRED_COLUMNS]
        records = []
        seen = set()
        n_unknown = 0
        for row in reader:
            sid = row["sample_id"]
            if sid in seen:
                raise DuplicateSampleId(sid)
            seen.add(sid)
            label_raw = row["label"].strip()
            if label_raw not in ("0", "1"):
                raise BadLabel(sid, label_raw)
            conf = float(row["confidence"])
            if not 0.0 <= conf <= 1.0:
                raise ConfidenceOutOfRange(sid, conf)
            attrs = {}
            for col in attr_cols:
                value = (row[col] or "").strip()
                vocab = schema.get(col)
                if vocab is not None and value not in vocab and value != UNKNOWN:
                    value = UNKNOWN
                    n_unknown += 1
                attrs[col] = value or UNKNOWN
            records.append(
                SampleRecord(
                    sample_id=sid,
                    patient_id=row["patient_id"],
                    label=int(label_raw),
                    confidence=conf,
                    attributes=attrs,
                )
            )
    return records, n_unknown


def save_metadata(path, records, schema):
    attr_cols = sorted(schema)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(REQUIRED_COLUMNS) + attr_cols)
        for r in records:
            writer.writerow(
                [r.sample_id, r.patient_id, r.label, repr(r.confidence)]
                + [r.attributes.get(c, UNKNOWN) for c in attr_cols]
            )


def load_schema(path):
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    return {name: list(values) for name, values in schema.items()}


def build_dataset(embeddings, records, schema):
    """Join records to embedding rows by sample_id, preserving embedding order."""
    by_id = {r.sample_id: r for r in records}
    if len(by_id) != len(records):
        raise DuplicateSampleId("metadata")
    emb_ids = set(embeddings.sample_ids)
    for sid in by_id:
        if sid not in emb_ids:
            raise UnjoinedSample(sid)
    ordered = []
    for sid in embeddings.sample_ids:
        rec = by_id.get(sid)
        if rec is None:
            raise UnjoinedSample(sid)
        ordered.append(rec)
    return Dataset(records=ordered, embeddings=embeddings, attribute_schema=schema)


def select_one_per_patient(records):
    """Keep one record per patient, preferring positives; ties go to the
    lexicographically smallest sample_id."""
    best = {}
    for r in records:
        cur = best.get(r.patient_id)
        if cur is None:
            best[r.patient_id] = r
            continue
        if r.label > cur.label:  # prefer positive label
            best[r.patient_id] = r
        elif r.label == cur.label and r.sample_id < cur.sample_id:
            best[r.patient_id] = r
    kept_ids = {r.sample_id for r in best.values()}
    return [r for r in records if r.sample_id in kept_ids]


def make_split(dataset, spec):
    """Partition sample indices into (train, val, test).

    Sizes target floor(N * frac) for val and test with the remainder going to
    train; all samples of a patient land in the same split, so targets are
    met exactly whenever each patient contributes one sample.
    """
    n = len(dataset.records)
    n_val = int(n * spec.val_frac)
    n_test = int(n * spec.test_frac)
    if n_val < 1 or n_test < 1 or n - n_val - n_test < 1:
        raise TooFewSamples(f"N={n} cannot fill all three splits")

    rng = np.random.default_rng(spec.seed)

    # group indices by patient, optionally keyed by a stratification attribute
    groups = {}
    for i, r in enumerate(dataset.records):
        key = r.patient_id
        groups.setdefault(key, []).append(i)

    if spec.stratify_by is not None:
        if spec.stratify_by not in dataset.attribute_schema:
            raise ValueError(f"stratify_by attribute {spec.stratify_by!r} not in schema")
        strata = {}
        for pid, idxs in groups.items():
            value = dataset.records[idxs[0]].attributes.get(spec.stratify_by, UNKNOWN)
            strata.setdefault(value, {})[pid] = idxs
        strata_order = [strata[v] for v in sorted(strata)]
    else:
        strata_order = [groups]

    test, val, train = [], [], []
    for stratum_groups in strata_order:
        pids = sorted(stratum_groups)
        order = rng.permutation(len(pids))
        for gi in order:
            idxs = stratum_groups[pids[gi]]
            if len(test) + len(idxs) <= n_test:
                test.extend(idxs)
            elif len(val) + len(idxs) <= n_val:
                val.extend(idxs)
            else:
                train.extend(idxs)
    if not train or not val or not test:
        raise TooFewSamples("a split came out empty")
    return sorted(train), sorted(val), sorted(test)
