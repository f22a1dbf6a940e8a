"""Finite-difference verification of analytic gradients.

Central differences are the independent reference both for the loss
score-gradients and for full parameter gradients through backprop. Checks
run at generic parameter points (small random biases) so pre-activations
do not sit exactly on the ReLU kink.
"""
from __future__ import annotations

import numpy as np

from .losses import LossKind, loss_grad, loss_value
from .model import backward, forward_features, init_model


def _random_labels(kind: LossKind, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind is LossKind.POINTWISE_LOGISTIC:
        return rng.uniform(0.0, 1.0, size=n)
    return rng.integers(0, 5, size=n).astype(np.float64)


def max_score_grad_error(kind: LossKind, trials: int = 100,
                         seed: int = 0, h: float = 1e-6) -> float:
    """Worst relative disagreement between loss_grad and central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 21))
        y = _random_labels(kind, n, rng)
        s = rng.normal(0.0, 2.0, size=n)
        analytic = loss_grad(kind, y, s)
        for i in range(n):
            up, dn = s.copy(), s.copy()
            up[i] += h
            dn[i] -= h
            numeric = (loss_value(kind, y, up) - loss_value(kind, y, dn)) / (2 * h)
            err = abs(analytic[i] - numeric) / (1.0 + abs(numeric))
            worst = max(worst, err)
    return worst


def max_param_grad_error(kind: LossKind, trials: int = 25,
                         seed: int = 0, h: float = 1e-5) -> float:
    """Worst relative disagreement of backprop parameter gradients.

    The loss is composed with the scorer and every parameter is perturbed
    in turn; the relative error uses an absolute floor so exactly-zero
    gradients (e.g. the output bias of shift-invariant losses) compare
    against finite-difference round-off fairly.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(trials):
        dims = [int(rng.integers(1, 5)), int(rng.integers(2, 7)),
                int(rng.integers(2, 7)), 1]
        model = init_model(dims, seed=trial)
        for b in model.biases:
            b += rng.normal(0.0, 0.1, size=b.shape)
        n = int(rng.integers(1, 7))
        x = rng.normal(size=(n, dims[0]))
        y = _random_labels(kind, n, rng)

        scores, cache = forward_features(model, x)
        grads = backward(model, cache, loss_grad(kind, y, scores))

        for layer in range(model.n_layers):
            for tensor, gtensor in (
                (model.weights[layer], grads.d_weights[layer]),
                (model.biases[layer], grads.d_biases[layer]),
            ):
                flat = tensor.ravel()
                gflat = gtensor.ravel()
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + h
                    up = loss_value(kind, y, forward_features(model, x)[0])
                    flat[idx] = orig - h
                    dn = loss_value(kind, y, forward_features(model, x)[0])
                    flat[idx] = orig
                    numeric = (up - dn) / (2 * h)
                    err = (abs(gflat[idx] - numeric)
                           / (1e-3 + max(abs(numeric), abs(gflat[idx]))))
                    worst = max(worst, err)
    return worst
