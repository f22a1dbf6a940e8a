"""Ranking loss family: value and analytic score-gradient per query list.

Four losses over (labels y, scores s), both length n:

* ``mse``       sum_i (y_i - s_i)^2
* ``logistic``  -sum_i [y_i ln p_i + (1-y_i) ln(1-p_i)],  p_i = sigmoid(s_i)
* ``ranknet``   -sum_{i!=j} 1[y_i > y_j] ln sigmoid(s_i - s_j)
* ``softmax``   -sum_i y_i ln softmax(s)_i

The pairwise and listwise losses depend on scores only through differences
s_i - s_j, so adding one constant to every score leaves them unchanged
(translation invariance); the pointwise losses are not invariant. All
transcendental terms use max-shifted / softplus forms so large score
magnitudes stay finite.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy.special import expit, log_softmax, softmax

from .errors import DomainError, LengthMismatch


class LossKind(enum.Enum):
    MSE = "mse"
    POINTWISE_LOGISTIC = "logistic"
    RANKNET = "ranknet"
    SOFTMAX = "softmax"

    @classmethod
    def from_name(cls, name: str) -> "LossKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise DomainError(
            f"unknown loss {name!r}; expected one of "
            + " | ".join(k.value for k in cls)
        )


def _check(kind: LossKind, y: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if y.ndim != 1 or s.ndim != 1 or y.shape != s.shape:
        raise LengthMismatch(f"y has shape {y.shape}, s has shape {s.shape}")
    if y.size < 1:
        raise LengthMismatch("empty list")
    if kind in (LossKind.SOFTMAX, LossKind.POINTWISE_LOGISTIC) and np.any(y < 0):
        raise DomainError(f"{kind.value} requires non-negative labels")
    if kind is LossKind.POINTWISE_LOGISTIC and np.any(y > 1):
        raise DomainError("logistic requires labels in [0, 1]")
    return y, s


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x), stable for large |x|
    return np.logaddexp(0.0, x)


def loss_value(kind: LossKind, y, s) -> float:
    """Loss of one query list; see module docstring for the formulas."""
    y, s = _check(kind, y, s)
    if kind is LossKind.MSE:
        return float(np.sum((y - s) ** 2))
    if kind is LossKind.POINTWISE_LOGISTIC:
        # y*(-ln p) + (1-y)*(-ln(1-p)) with p = sigmoid(s)
        return float(np.sum(y * _softplus(-s) + (1.0 - y) * _softplus(s)))
    if kind is LossKind.RANKNET:
        diff = s[:, None] - s[None, :]
        wins = y[:, None] > y[None, :]
        return float(np.sum(_softplus(-diff[wins])))
    if kind is LossKind.SOFTMAX:
        return float(-np.sum(y * log_softmax(s)))
    raise AssertionError(kind)


def loss_grad(kind: LossKind, y, s) -> np.ndarray:
    """Analytic gradient of :func:`loss_value` with respect to the scores."""
    y, s = _check(kind, y, s)
    if kind is LossKind.MSE:
        return -2.0 * (y - s)
    if kind is LossKind.POINTWISE_LOGISTIC:
        return -(y - expit(s))
    if kind is LossKind.RANKNET:
        # pair (i, j) with y_i > y_j contributes -sigmoid(s_j - s_i) to
        # grad_i and +sigmoid(s_j - s_i) to grad_j
        wins = (y[:, None] > y[None, :]).astype(np.float64)
        g = expit(s[None, :] - s[:, None]) * wins
        return g.sum(axis=0) - g.sum(axis=1)
    if kind is LossKind.SOFTMAX:
        return -(y - softmax(s) * np.sum(y))
    raise AssertionError(kind)


def is_translation_invariant(kind: LossKind) -> bool:
    """Whether adding a constant to all scores leaves the loss unchanged."""
    return kind in (LossKind.RANKNET, LossKind.SOFTMAX)
