"""Query-grouped ranking datasets: SVMLight parsing, synthesis, splitting,
and Gaussian feature augmentation.

Labels are stored as float64 even when the source grades are integers,
because distillation labels (transformed teacher scores) are continuous and
flow through the same containers.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidConfig,
    InvalidFractions,
    MalformedLine,
    NegativeLabel,
)


@dataclass
class DocRow:
    """One query-document pair as it appears in an input file."""

    qid: str
    label: float
    features: np.ndarray


@dataclass(eq=False)
class QueryList:
    """All documents of one query, in original file/generation order.

    ``doc_ids`` is a permutation of ``0..n-1`` carrying the original row
    index of each document; it is the alignment key for teacher-score files.
    """

    qid: str
    features: np.ndarray  # (n, k)
    labels: np.ndarray    # (n,)
    doc_ids: np.ndarray   # (n,) ints

    @property
    def n_docs(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueryList):
            return NotImplemented
        return (
            self.qid == other.qid
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.doc_ids, other.doc_ids)
        )


@dataclass(eq=False)
class Dataset:
    query_lists: list[QueryList]
    feature_count: int
    name: str = ""

    @property
    def n_queries(self) -> int:
        return len(self.query_lists)

    @property
    def n_docs(self) -> int:
        return sum(ql.n_docs for ql in self.query_lists)

    def qids(self) -> list[str]:
        return [ql.qid for ql in self.query_lists]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_count == other.feature_count
            and self.query_lists == other.query_lists
        )

    def __iter__(self):
        return iter(self.query_lists)


@dataclass
class SyntheticConfig:
    """Configuration for the synthetic query-grouped dataset generator.

    ``label_noise_rate`` is the fraction of labels replaced by a uniform
    random grade, modeling mistakenly labeled documents.
    """

    num_queries: int
    docs_per_query: tuple[int, int]
    feature_count: int
    latent_weight_seed: int = 0
    label_grades: int = 4
    label_noise_rate: float = 0.0
    rng_seed: int = 0

    def validate(self) -> None:
        if self.num_queries < 1:
            raise InvalidConfig("num_queries must be >= 1")
        lo, hi = self.docs_per_query
        if lo < 1 or hi < lo:
            raise InvalidConfig(f"bad docs_per_query range ({lo}, {hi})")
        if self.feature_count < 1:
            raise InvalidConfig("feature_count must be >= 1")
        if self.label_grades < 1:
            raise InvalidConfig("label_grades must be >= 1")
        if not 0.0 <= self.label_noise_rate <= 1.0:
            raise InvalidConfig("label_noise_rate must be in [0, 1]")


_SYNTH_KEYS = {
    "num_queries", "docs_per_query", "feature_count", "latent_weight_seed",
    "label_grades", "label_noise_rate", "rng_seed",
}


def load_synthetic_config(path: str) -> SyntheticConfig:
    """Read a SyntheticConfig from a JSON file keyed by the field names."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    unknown = set(raw) - _SYNTH_KEYS
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    if "num_queries" not in raw or "docs_per_query" not in raw or "feature_count" not in raw:
        raise InvalidConfig("num_queries, docs_per_query and feature_count are required")
    raw["docs_per_query"] = tuple(raw["docs_per_query"])
    cfg = SyntheticConfig(**raw)
    cfg.validate()
    return cfg


# --- SVMLight / LETOR text format ----------------------------------------

def parse_svmlight(source, name: str = "") -> Dataset:
    """Parse SVMLight/LETOR text into a query-grouped Dataset.

    ``source`` may be a string or a text stream. Lines look like
    ``<label> qid:<id> <idx>:<val> ... # comment``; feature indices are
    1-based and may be sparse — absent indices densify to 0.0. Rows are
    grouped by qid preserving file order within each query; query order is
    the order of first appearance.
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    parsed: list[tuple[str, float, list[tuple[int, float]]]] = []
    max_index = 0

    for line_no, line in enumerate(source, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise MalformedLine(line_no, "expected '<label> qid:<id> ...'")
        try:
            label = float(parts[0])
        except ValueError:
            raise MalformedLine(line_no, f"bad label {parts[0]!r}") from None
        if not np.isfinite(label):
            raise MalformedLine(line_no, f"non-finite label {parts[0]!r}")
        if label < 0:
            raise NegativeLabel(line_no)
        if not parts[1].startswith("qid:") or len(parts[1]) == 4:
            raise MalformedLine(line_no, f"bad qid token {parts[1]!r}")
        qid = parts[1][4:]

        pairs: list[tuple[int, float]] = []
        for tok in parts[2:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise MalformedLine(line_no, f"bad feature token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise MalformedLine(line_no, f"bad feature token {tok!r}") from None
            if idx < 1:
                raise MalformedLine(line_no, f"feature index {idx} is not 1-based")
            pairs.append((idx, val))
            max_index = max(max_index, idx)
        parsed.append((qid, label, pairs))

    if not parsed:
        raise EmptyDataset("no valid rows")

    k = max_index
    grouped: dict[str, list[DocRow]] = {}
    order: list[str] = []
    for qid, label, pairs in parsed:
        dense = np.zeros(k, dtype=np.float64)
        for idx, val in pairs:
            dense[idx - 1] = val
        if qid not in grouped:
            grouped[qid] = []
            order.append(qid)
        grouped[qid].append(DocRow(qid=qid, label=label, features=dense))

    query_lists = []
    for qid in order:
        docs = grouped[qid]
        query_lists.append(QueryList(
            qid=qid,
            features=np.vstack([d.features for d in docs]),
            labels=np.array([d.label for d in docs], dtype=np.float64),
            doc_ids=np.arange(len(docs)),
        ))
    return Dataset(query_lists=query_lists, feature_count=k, name=name)


def write_svmlight(ds: Dataset, stream=None) -> str | None:
    """Serialize a Dataset back to SVMLight text (dense: all indices written).

    Writing every feature value keeps the round trip exact even when a
    trailing feature column is all zeros. Returns the text when no stream
    is given.
    """
    out = stream if stream is not None else io.StringIO()
    for ql in ds.query_lists:
        for i in range(ql.n_docs):
            feats = " ".join(
                f"{j + 1}:{_fmt(v)}" for j, v in enumerate(ql.features[i])
            )
            out.write(f"{_fmt(ql.labels[i])} qid:{ql.qid} {feats}\n")
    if stream is None:
        return out.getvalue()
    return None


def _fmt(v: float) -> str:
    return repr(float(v))


# --- synthetic data -------------------------------------------------------

def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Generate a query-grouped dataset with a linear latent relevance model.

    Features are uniform on [0,1]^k. The clean grade of a document is the
    latent score w.x plus a per-query bias, discretized into 0..G by
    equal-width bins over the dataset-wide empirical score range (so every
    grade occurs). With probability ``label_noise_rate`` a label is replaced
    by an independent uniform grade.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    w = latent_weights(cfg)

    lo, hi = cfg.docs_per_query
    counts = rng.integers(lo, hi + 1, size=cfg.num_queries)
    feats = [rng.uniform(0.0, 1.0, size=(n, cfg.feature_count)) for n in counts]
    biases = rng.normal(0.0, 0.25, size=cfg.num_queries)
    scores = [x @ w + b for x, b in zip(feats, biases)]

    flat = np.concatenate(scores)
    s_min, s_max = flat.min(), flat.max()
    g = cfg.label_grades
    span = s_max - s_min
    if span == 0.0:
        span = 1.0

    query_lists = []
    for q in range(cfg.num_queries):
        grades = np.floor((scores[q] - s_min) / span * (g + 1)).astype(np.int64)
        grades = np.clip(grades, 0, g)
        if cfg.label_noise_rate > 0.0:
            flip = rng.uniform(size=counts[q]) < cfg.label_noise_rate
            regrade = rng.integers(0, g + 1, size=counts[q])
            grades = np.where(flip, regrade, grades)
        query_lists.append(QueryList(
            qid=str(q + 1),
            features=feats[q],
            labels=grades.astype(np.float64),
            doc_ids=np.arange(counts[q]),
        ))
    return Dataset(query_lists=query_lists, feature_count=cfg.feature_count,
                   name=f"synthetic-{cfg.rng_seed}")


def latent_weights(cfg: SyntheticConfig) -> np.ndarray:
    """The unit-norm latent weight vector a generator with this config uses."""
    w = np.random.default_rng(cfg.latent_weight_seed).normal(
        0.0, 1.0, size=cfg.feature_count)
    return w / np.linalg.norm(w)


# --- splitting and augmentation -------------------------------------------

def split(ds: Dataset, fractions: tuple[float, float, float],
          seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Split at query granularity into (train, valid, test).

    Fractions must all be positive and sum to 1. Queries are shuffled with
    the given seed and partitioned by cumulative rounding, so the union of
    qids always equals the original set.
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr):
        raise InvalidFractions(f"fractions must be positive: {fr}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise InvalidFractions(f"fractions must sum to 1: {fr}")

    n = ds.n_queries
    order = np.random.default_rng(seed).permutation(n)
    edge1 = int(fr[0] * n + 0.5)
    edge2 = int((fr[0] + fr[1]) * n + 0.5)

    def take(idx) -> Dataset:
        return Dataset(
            query_lists=[ds.query_lists[i] for i in idx],
            feature_count=ds.feature_count,
            name=ds.name,
        )

    return (take(order[:edge1]), take(order[edge1:edge2]), take(order[edge2:]))


def augment_gaussian(ql: QueryList, sigma: float,
                     rng: np.random.Generator) -> QueryList:
    """Add i.i.d. N(0, sigma^2) noise to every feature entry; labels untouched."""
    if sigma < 0:
        raise InvalidConfig("sigma must be >= 0")
    if sigma == 0.0:
        return ql
    noisy = ql.features + rng.normal(0.0, sigma, size=ql.features.shape)
    return QueryList(qid=ql.qid, features=noisy, labels=ql.labels,
                     doc_ids=ql.doc_ids)
