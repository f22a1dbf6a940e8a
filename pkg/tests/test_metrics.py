"""Tests for DCG/NDCG, including an independent brute-force oracle."""

import math

import numpy as np
import pytest

from rankdistill.data import Dataset, QueryList
from rankdistill.errors import ShapeMismatch
from rankdistill.metrics import (
    dcg,
    evaluate_dataset,
    ndcg_at_k,
    rank_by_scores,
)
from rankdistill.model import ScoringModel


def brute_force_ndcg(s, y, k):
    """Independent NDCG@k: materialize both sorted lists, sum term by term."""
    s = list(map(float, s))
    y = list(map(float, y))
    idx = list(range(len(s)))
    by_score = sorted(idx, key=lambda i: (-s[i], i))
    by_label = sorted(idx, key=lambda i: (-y[i], i))

    def summed(order):
        total = 0.0
        for rank, i in enumerate(order[:k], start=1):
            total += (2.0 ** y[i] - 1.0) / math.log2(1.0 + rank)
        return total

    ideal = summed(by_label)
    if ideal == 0.0:
        return 0.0
    return summed(by_score) / ideal


def linear_model(k):
    return ScoringModel(layer_dims=[k, 1], weights=[np.ones((1, k))],
                        biases=[np.zeros(1)])


class TestRankByScores:
    def test_two_docs(self):
        r = rank_by_scores([0.1, 0.9])
        np.testing.assert_array_equal(r.positions, [2, 1])

    def test_tie_goes_to_lower_doc_id(self):
        r = rank_by_scores([0.5, 0.5])
        np.testing.assert_array_equal(r.positions, [1, 2])

    def test_three_docs(self):
        r = rank_by_scores([3.0, 1.0, 2.0])
        np.testing.assert_array_equal(r.positions, [1, 3, 2])

    def test_positions_are_a_permutation(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(1, 12))
            r = rank_by_scores(rng.normal(size=n))
            assert sorted(r.positions) == list(range(1, n + 1))


class TestDcg:
    def test_hand_value(self):
        y = [3.0, 1.0]
        r = rank_by_scores([2.0, 1.0])  # already ideal
        expected = 7.0 + 1.0 / math.log2(3.0)
        assert dcg(r, y, 2) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(7.630930, abs=1e-6)

    def test_all_zero_labels(self):
        r = rank_by_scores([1.0, 2.0, 3.0])
        assert dcg(r, [0.0, 0.0, 0.0], 3) == 0.0

    def test_cutoff_one(self):
        r = rank_by_scores([5.0, 1.0])
        assert dcg(r, [1.0, 3.0], 1) == pytest.approx(1.0)


class TestNdcg:
    def test_ideal_order_is_one(self):
        assert ndcg_at_k([3.0, 2.0, 1.0], [4.0, 2.0, 0.0], 3) == 1.0

    def test_all_zero_labels_scores_zero(self):
        assert ndcg_at_k([1.0, 2.0], [0.0, 0.0], 5) == 0.0

    def test_hand_value(self):
        got = ndcg_at_k([0.0, 1.0], [3.0, 1.0], 2)
        expected = (1.0 + 7.0 / math.log2(3.0)) / (7.0 + 1.0 / math.log2(3.0))
        assert got == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.709810, abs=1e-6)
        assert got == pytest.approx(brute_force_ndcg([0.0, 1.0], [3.0, 1.0], 2),
                                    abs=1e-15)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(500):
            n = int(rng.integers(1, 9))
            y = rng.integers(0, 5, size=n).astype(float)
            s = rng.normal(size=n)
            if rng.uniform() < 0.25:  # force score ties sometimes
                s = np.round(s)
            for k in (1, 3, 5, 10):
                assert abs(ndcg_at_k(s, y, k) - brute_force_ndcg(s, y, k)) <= 1e-12

    def test_scale_shift_invariance_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(2, 15))
            y = rng.integers(0, 5, size=n).astype(float)
            s = rng.normal(size=n)
            a = float(rng.uniform(1e-3, 1e3))
            b = float(rng.uniform(-1e3, 1e3))
            assert ndcg_at_k(a * s + b, y, 5) == ndcg_at_k(s, y, 5)

    def test_bounds_and_ideal_cutoffs(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            y = rng.integers(0, 5, size=n).astype(float)
            s = rng.normal(size=n)
            for k in (1, 2, 5, 10):
                v = ndcg_at_k(s, y, k)
                assert 0.0 <= v <= 1.0
                # ideal ordering gives 1 at every cutoff (unless no gains)
                if y.max() > 0:
                    assert ndcg_at_k(y, y, k) == 1.0


class TestEvaluateDataset:
    def _dataset(self):
        # two queries; the linear model scores by x0, so the first query is
        # ranked ideally and the second inversely
        q1 = QueryList(qid="good", features=np.array([[2.0], [1.0]]),
                       labels=np.array([3.0, 1.0]), doc_ids=np.arange(2))
        q2 = QueryList(qid="bad", features=np.array([[2.0], [1.0]]),
                       labels=np.array([0.0, 2.0]), doc_ids=np.arange(2))
        return Dataset(query_lists=[q1, q2], feature_count=1)

    def test_single_ideal_query(self):
        ds = Dataset(query_lists=self._dataset().query_lists[:1],
                     feature_count=1)
        report = evaluate_dataset(linear_model(1), ds)
        np.testing.assert_allclose(report.means, 1.0)

    def test_arithmetic_mean(self):
        report = evaluate_dataset(linear_model(1), self._dataset(), ks=[1])
        per_query = report.per_query[:, 0]
        assert per_query[0] == 1.0
        assert report.means[0] == pytest.approx(per_query.mean())

    def test_zero_label_queries_counted(self):
        q = QueryList(qid="z", features=np.array([[1.0], [2.0]]),
                      labels=np.array([0.0, 0.0]), doc_ids=np.arange(2))
        ds = self._dataset()
        ds.query_lists.append(q)
        report = evaluate_dataset(linear_model(1), ds, ks=[5])
        assert report.per_query[-1, 0] == 0.0
        assert report.query_count == 3

    def test_feature_mismatch(self):
        with pytest.raises(ShapeMismatch):
            evaluate_dataset(linear_model(3), self._dataset())

    def test_tsv_format(self):
        report = evaluate_dataset(linear_model(1), self._dataset())
        lines = report.to_tsv().strip().split("\n")
        assert len(lines) == 3
        assert lines[0].split("\t")[0] == "good"
        assert lines[-1].split("\t")[0] == "MEAN"
        assert len(lines[0].split("\t")) == 4
