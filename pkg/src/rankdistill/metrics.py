"""Rank-dependent evaluation: DCG, NDCG@k, and dataset-level reports.

Gains are 2^y - 1 with log2(1 + rank) discounts. Ties are broken by the
original document index in both the model ranking and the ideal ranking,
so results are deterministic and depend on input order only through exact
score ties. Queries whose labels are all zero score 0 and are included in
dataset means.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ShapeMismatch
from .model import ScoringModel, score_query


@dataclass
class Ranking:
    """positions[i] is the 1-based rank of document i (1 = top)."""

    positions: np.ndarray


def rank_by_scores(s, doc_ids=None) -> Ranking:
    """Rank by descending score; ties go to the smaller doc_id."""
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    ids = np.arange(n) if doc_ids is None else np.asarray(doc_ids)
    order = np.lexsort((ids, -s))  # primary: -s ascending, secondary: id
    positions = np.empty(n, dtype=np.int64)
    positions[order] = np.arange(1, n + 1)
    return Ranking(positions=positions)


def dcg(ranking: Ranking, y, k: int) -> float:
    y = np.asarray(y, dtype=np.float64)
    pos = ranking.positions
    within = pos <= k
    gains = np.exp2(y[within]) - 1.0
    discounts = np.log2(1.0 + pos[within])
    return float(np.sum(gains / discounts))


def ideal_ranking(y, doc_ids=None) -> Ranking:
    return rank_by_scores(np.asarray(y, dtype=np.float64), doc_ids)


def ndcg_at_k(s, y, k: int) -> float:
    """NDCG@k of scores s against labels y; 0 when all labels are zero."""
    y = np.asarray(y, dtype=np.float64)
    ideal = dcg(ideal_ranking(y), y, k)
    if ideal == 0.0:
        return 0.0
    return dcg(rank_by_scores(s), y, k) / ideal


@dataclass
class MetricReport:
    ks: list[int]
    qids: list[str]
    per_query: np.ndarray  # (n_queries, len(ks))
    means: np.ndarray      # (len(ks),)

    @property
    def query_count(self) -> int:
        return len(self.qids)

    def mean_at(self, k: int) -> float:
        return float(self.means[self.ks.index(k)])

    def to_tsv(self) -> str:
        """Rows `qid<TAB>ndcg@k...` and a final MEAN row."""
        out = io.StringIO()
        for qid, row in zip(self.qids, self.per_query):
            out.write(qid + "\t" + "\t".join(f"{v:.6f}" for v in row) + "\n")
        out.write("MEAN\t" + "\t".join(f"{v:.6f}" for v in self.means) + "\n")
        return out.getvalue()


def evaluate_dataset(model: ScoringModel, ds: Dataset,
                     ks=(1, 5, 10)) -> MetricReport:
    """Inference-mode NDCG@k per query plus arithmetic means."""
    if ds.feature_count != model.layer_dims[0]:
        raise ShapeMismatch(
            f"dataset has {ds.feature_count} features, model expects "
            f"{model.layer_dims[0]}")
    ks = list(ks)
    rows = np.zeros((ds.n_queries, len(ks)))
    qids = []
    for qi, ql in enumerate(ds.query_lists):
        scores = score_query(model, ql)
        qids.append(ql.qid)
        for ki, k in enumerate(ks):
            rows[qi, ki] = ndcg_at_k(scores, ql.labels, k)
    means = rows.mean(axis=0) if len(qids) else np.zeros(len(ks))
    return MetricReport(ks=ks, qids=qids, per_query=rows, means=means)


def ndcg_of_scores(scores_by_query: list[np.ndarray], ds: Dataset, k: int) -> float:
    """Mean NDCG@k when scores are already computed, one array per query."""
    vals = [ndcg_at_k(s, ql.labels, k) for s, ql in zip(scores_by_query, ds.query_lists)]
    return float(np.mean(vals)) if vals else 0.0
