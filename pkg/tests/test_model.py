"""Tests for the feed-forward scorer: forward, backprop, serialization."""

import numpy as np
import pytest

from rankdistill.data import QueryList
from rankdistill.errors import CorruptModelFile, InvalidDims, ShapeMismatch
from rankdistill.losses import LossKind, loss_grad, loss_value
from rankdistill.model import (
    ScoringModel,
    backward,
    deserialize,
    forward,
    init_model,
    score_query,
    serialize,
)


def make_ql(rng, n, k):
    return QueryList(qid="q", features=rng.normal(size=(n, k)),
                     labels=rng.integers(0, 3, size=n).astype(float),
                     doc_ids=np.arange(n))


def linear_model(w_row, b0=0.0):
    w = np.asarray(w_row, dtype=float)
    return ScoringModel(layer_dims=[w.size, 1],
                        weights=[w.reshape(1, -1)],
                        biases=[np.array([b0])])


class TestInitModel:
    def test_shapes_and_zero_bias(self):
        m = init_model([2, 1], seed=0)
        assert m.weights[0].shape == (1, 2)
        np.testing.assert_array_equal(m.biases[0], [0.0])
        assert m.param_count() == 3

    def test_deterministic(self):
        a = init_model([3, 5, 1], seed=42)
        b = init_model([3, 5, 1], seed=42)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_he_scaling(self):
        m = init_model([1000, 200, 1], seed=1)
        observed = m.weights[0].std()
        assert observed == pytest.approx(np.sqrt(2.0 / 1000), rel=0.1)

    def test_bad_dims(self):
        with pytest.raises(InvalidDims):
            init_model([2, 3, 2], seed=0)
        with pytest.raises(InvalidDims):
            init_model([2, 0, 1], seed=0)
        with pytest.raises(InvalidDims):
            init_model([1], seed=0)


class TestForward:
    def test_hand_computed_linear(self):
        m = linear_model([1.0, 1.0])
        ql = QueryList(qid="q", features=np.array([[2.0, 3.0]]),
                       labels=np.array([1.0]), doc_ids=np.array([0]))
        scores, _ = forward(m, ql)
        assert scores[0] == pytest.approx(5.0)

    def test_inference_is_deterministic(self):
        rng = np.random.default_rng(3)
        m = init_model([4, 8, 1], seed=5, dropout_rate=0.5)
        ql = make_ql(rng, 6, 4)
        a, _ = forward(m, ql, training=False)
        b, _ = forward(m, ql, training=False)
        np.testing.assert_array_equal(a, b)

    def test_dead_relu_leaves_output_bias(self):
        m = ScoringModel(
            layer_dims=[1, 2, 1],
            weights=[np.array([[1.0], [2.0]]), np.array([[3.0, 4.0]])],
            biases=[np.array([0.0, 0.0]), np.array([0.25])],
        )
        ql = QueryList(qid="q", features=np.array([[-5.0]]),
                       labels=np.array([0.0]), doc_ids=np.array([0]))
        scores, _ = forward(m, ql)
        assert scores[0] == pytest.approx(0.25)

    def test_shape_mismatch(self):
        m = init_model([3, 1], seed=0)
        ql = make_ql(np.random.default_rng(0), 4, 2)
        with pytest.raises(ShapeMismatch):
            forward(m, ql)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        m = init_model([4, 6, 1], seed=2)
        ql = make_ql(rng, 8, 4)
        scores, _ = forward(m, ql)
        perm = rng.permutation(8)
        ql_p = QueryList(qid="q", features=ql.features[perm],
                         labels=ql.labels[perm], doc_ids=np.arange(8))
        scores_p, _ = forward(m, ql_p)
        np.testing.assert_allclose(scores_p, scores[perm], rtol=0, atol=0)

    def test_dropout_changes_training_scores_only(self):
        rng = np.random.default_rng(9)
        m = init_model([4, 16, 1], seed=5, dropout_rate=0.5)
        ql = make_ql(rng, 6, 4)
        plain = score_query(m, ql)
        dropped, _ = forward(m, ql, training=True, rng=np.random.default_rng(1))
        assert not np.allclose(plain, dropped)


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        rng = np.random.default_rng(0)
        m = init_model([3, 4, 1], seed=1)
        ql = make_ql(rng, 5, 3)
        _, cache = forward(m, ql)
        grads = backward(m, cache, np.zeros(5))
        for g in grads.d_weights + grads.d_biases:
            np.testing.assert_array_equal(g, 0.0)

    def test_hand_computed_linear(self):
        m = linear_model([1.0, 1.0])
        ql = QueryList(qid="q", features=np.array([[2.0, 3.0]]),
                       labels=np.array([1.0]), doc_ids=np.array([0]))
        _, cache = forward(m, ql)
        grads = backward(m, cache, np.array([1.0]))
        np.testing.assert_allclose(grads.d_weights[0], [[2.0, 3.0]])
        np.testing.assert_allclose(grads.d_biases[0], [1.0])

    @pytest.mark.parametrize("kind", list(LossKind), ids=lambda k: k.value)
    def test_param_grads_match_finite_differences(self, kind):
        # composes each loss with backprop and checks every parameter
        # against a central-difference quotient of the end-to-end loss
        rng = np.random.default_rng(17)
        for trial in range(30):
            dims = [int(rng.integers(1, 5)), int(rng.integers(2, 7)),
                    int(rng.integers(2, 7)), 1]
            m = init_model(dims, seed=trial)
            # generic bias values keep pre-activations away from the exact
            # ReLU kink that fresh zero biases would sit on
            for b in m.biases:
                b += rng.normal(0.0, 0.1, size=b.shape)
            n = int(rng.integers(1, 7))
            ql = make_ql(rng, n, dims[0])
            y = (ql.labels / 2.0 if kind is LossKind.POINTWISE_LOGISTIC
                 else ql.labels)

            scores, cache = forward(m, ql)
            grads = backward(m, cache, loss_grad(kind, y, scores))

            h = 1e-5
            for layer in range(m.n_layers):
                for tensor, gtensor in ((m.weights[layer], grads.d_weights[layer]),
                                        (m.biases[layer], grads.d_biases[layer])):
                    flat = tensor.ravel()
                    gflat = gtensor.ravel()
                    for idx in range(flat.size):
                        orig = flat[idx]
                        flat[idx] = orig + h
                        up = loss_value(kind, y, forward(m, ql)[0])
                        flat[idx] = orig - h
                        dn = loss_value(kind, y, forward(m, ql)[0])
                        flat[idx] = orig
                        numeric = (up - dn) / (2 * h)
                        # atol floor absorbs quotient round-off on
                        # coordinates whose exact gradient is zero (e.g.
                        # the output bias under shift-invariant losses)
                        tol = 1e-7 + 1e-4 * max(abs(numeric), abs(gflat[idx]))
                        assert abs(gflat[idx] - numeric) <= tol

    def test_dropout_masks_respected(self):
        # finite differences of the dropout-masked forward pass, replaying
        # the identical mask by reusing the cache's stored masks
        rng = np.random.default_rng(23)
        m = init_model([3, 8, 1], seed=4, dropout_rate=0.4)
        ql = make_ql(rng, 5, 3)
        scores, cache = forward(m, ql, training=True,
                                rng=np.random.default_rng(77))
        y = ql.labels
        grads = backward(m, cache, loss_grad(LossKind.MSE, y, scores))

        def masked_forward():
            a = ql.features
            last = m.n_layers - 1
            for l, (w, b) in enumerate(zip(m.weights, m.biases)):
                z = a @ w.T + b
                if l == last:
                    a = z
                else:
                    a = np.maximum(z, 0.0) * cache.dropout_masks[l]
            return a[:, 0]

        h = 1e-5
        w0 = m.weights[0]
        g0 = grads.d_weights[0]
        for idx in np.ndindex(w0.shape):
            orig = w0[idx]
            w0[idx] = orig + h
            up = loss_value(LossKind.MSE, y, masked_forward())
            w0[idx] = orig - h
            dn = loss_value(LossKind.MSE, y, masked_forward())
            w0[idx] = orig
            numeric = (up - dn) / (2 * h)
            denom = max(abs(numeric), abs(g0[idx]), 1e-8)
            assert abs(g0[idx] - numeric) / denom < 1e-4

    def test_bad_dl_ds_shape(self):
        m = init_model([2, 1], seed=0)
        ql = make_ql(np.random.default_rng(0), 3, 2)
        _, cache = forward(m, ql)
        with pytest.raises(ShapeMismatch):
            backward(m, cache, np.zeros(4))


class TestSerialization:
    def test_round_trip_bit_identical(self):
        m = init_model([3, 7, 4, 1], seed=123)
        m2 = deserialize(serialize(m))
        assert m2.layer_dims == m.layer_dims
        for a, b in zip(m.weights + m.biases, m2.weights + m2.biases):
            np.testing.assert_array_equal(a, b)

    def test_truncated_file(self):
        text = serialize(init_model([3, 2, 1], seed=0))
        truncated = "\n".join(text.splitlines()[:-1])
        with pytest.raises(CorruptModelFile):
            deserialize(truncated)

    def test_header_payload_mismatch(self):
        text = serialize(init_model([3, 2, 1], seed=0))
        lines = text.splitlines()
        lines[0] = "dims: 4 2 1"
        with pytest.raises(CorruptModelFile):
            deserialize("\n".join(lines))

    def test_missing_header(self):
        with pytest.raises(CorruptModelFile):
            deserialize("1.0 2.0\n")

    def test_garbage_value(self):
        text = serialize(init_model([2, 1], seed=0))
        with pytest.raises(CorruptModelFile):
            deserialize(text.replace("0.0", "zero", 1))
