"""Feed-forward scoring model with hand-derived backpropagation.

The model scores each document independently (univariate scoring): ReLU
hidden layers, identity output, one score per feature row. ``backward``
turns a vector of per-document loss gradients dL/ds into exact parameter
gradients, so any loss that provides a score-gradient can train the model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import QueryList
from .errors import CorruptModelFile, InvalidDims, ShapeMismatch


@dataclass
class ScoringModel:
    layer_dims: list[int]
    weights: list[np.ndarray]   # weights[l] has shape (dims[l+1], dims[l])
    biases: list[np.ndarray]    # biases[l] has shape (dims[l+1],)
    dropout_rate: float = 0.0

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "ScoringModel":
        return ScoringModel(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            dropout_rate=self.dropout_rate,
        )


@dataclass
class ForwardCache:
    """Intermediate activations of one forward pass, consumed by backward."""

    inputs: np.ndarray                     # (n, k)
    pre_activations: list[np.ndarray]      # z_l, one per layer
    activations: list[np.ndarray]          # post-ReLU (and dropout) outputs
    dropout_masks: list[np.ndarray | None] # per hidden layer, None if unused


@dataclass
class ParamGrads:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: ScoringModel) -> "ParamGrads":
        return cls(
            d_weights=[np.zeros_like(w) for w in model.weights],
            d_biases=[np.zeros_like(b) for b in model.biases],
        )

    def add_scaled(self, other: "ParamGrads", scale: float = 1.0) -> None:
        for dw, ow in zip(self.d_weights, other.d_weights):
            dw += scale * ow
        for db, ob in zip(self.d_biases, other.d_biases):
            db += scale * ob


def init_model(layer_dims, seed: int, dropout_rate: float = 0.0) -> ScoringModel:
    """He-initialized model: weights ~ N(0, 2/fan_in), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise InvalidDims("need at least an input and an output dimension")
    if dims[-1] != 1:
        raise InvalidDims(f"output dimension must be 1, got {dims[-1]}")
    if any(d < 1 for d in dims):
        raise InvalidDims(f"all dimensions must be >= 1: {dims}")
    if not 0.0 <= dropout_rate < 1.0:
        raise InvalidDims(f"dropout_rate must be in [0, 1): {dropout_rate}")

    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ScoringModel(layer_dims=dims, weights=weights, biases=biases,
                        dropout_rate=dropout_rate)


def forward_features(model: ScoringModel, features: np.ndarray,
                     training: bool = False,
                     rng: np.random.Generator | None = None
                     ) -> tuple[np.ndarray, ForwardCache]:
    """Score a feature matrix (n, k); returns (scores, cache).

    Dropout (inverted scaling) is applied to hidden activations only when
    ``training`` is true and the model has a nonzero dropout rate.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise ShapeMismatch(
            f"features shape {x.shape} does not match input dim {model.layer_dims[0]}")

    use_dropout = training and model.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ShapeMismatch("training forward with dropout needs an rng")

    a = x
    pres, acts, masks = [], [], []
    last = model.n_layers - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pres.append(z)
        if l == last:
            a = z
            masks.append(None)
        else:
            a = np.maximum(z, 0.0)
            if use_dropout:
                keep = 1.0 - model.dropout_rate
                mask = (rng.uniform(size=a.shape) < keep) / keep
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
        acts.append(a)

    scores = acts[-1][:, 0]
    return scores, ForwardCache(inputs=x, pre_activations=pres,
                                activations=acts, dropout_masks=masks)


def forward(model: ScoringModel, ql: QueryList, training: bool = False,
            rng: np.random.Generator | None = None
            ) -> tuple[np.ndarray, ForwardCache]:
    """Score one query list; see :func:`forward_features`."""
    return forward_features(model, ql.features, training=training, rng=rng)


def score_query(model: ScoringModel, ql: QueryList) -> np.ndarray:
    """Inference-mode scores for one query list."""
    return forward(model, ql, training=False)[0]


def backward(model: ScoringModel, cache: ForwardCache,
             dL_ds: np.ndarray) -> ParamGrads:
    """Exact gradients of sum_i dL_ds[i] * scores[i] w.r.t. all parameters.

    Respects the dropout masks recorded in the cache; the ReLU subgradient
    at 0 is taken as 0.
    """
    dL_ds = np.asarray(dL_ds, dtype=np.float64)
    n = cache.inputs.shape[0]
    if dL_ds.shape != (n,):
        raise ShapeMismatch(f"dL_ds shape {dL_ds.shape} != ({n},)")

    d_weights = [None] * model.n_layers
    d_biases = [None] * model.n_layers

    delta = dL_ds[:, None]  # gradient w.r.t. the output layer's z
    for l in range(model.n_layers - 1, -1, -1):
        a_prev = cache.inputs if l == 0 else cache.activations[l - 1]
        d_weights[l] = delta.T @ a_prev
        d_biases[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l]
            mask = cache.dropout_masks[l - 1]
            if mask is not None:
                delta = delta * mask
            delta = delta * (cache.pre_activations[l - 1] > 0.0)

    return ParamGrads(d_weights=d_weights, d_biases=d_biases)


# --- checkpoint format -----------------------------------------------------
#
# Line 1: "dims: k h1 ... 1"; then one line per parameter tensor in the
# order W0 b0 W1 b1 ..., row-major, repr() numerals (exact float64 round
# trip).

def serialize(model: ScoringModel) -> str:
    lines = ["dims: " + " ".join(str(d) for d in model.layer_dims)]
    for w, b in zip(model.weights, model.biases):
        lines.append(" ".join(repr(float(v)) for v in w.ravel()))
        lines.append(" ".join(repr(float(v)) for v in b))
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> ScoringModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dims:"):
        raise CorruptModelFile("missing 'dims:' header")
    try:
        dims = [int(tok) for tok in lines[0][5:].split()]
    except ValueError:
        raise CorruptModelFile("unparsable dims header") from None
    if len(dims) < 2 or dims[-1] != 1 or any(d < 1 for d in dims):
        raise CorruptModelFile(f"invalid dims {dims}")

    n_layers = len(dims) - 1
    if len(lines) - 1 != 2 * n_layers:
        raise CorruptModelFile(
            f"expected {2 * n_layers} tensor lines, found {len(lines) - 1}")

    weights, biases = [], []
    pos = 1
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = _parse_tensor(lines[pos], fan_out * fan_in).reshape(fan_out, fan_in)
        b = _parse_tensor(lines[pos + 1], fan_out)
        pos += 2
        weights.append(w)
        biases.append(b)
    return ScoringModel(layer_dims=dims, weights=weights, biases=biases)


def _parse_tensor(line: str, expected: int) -> np.ndarray:
    toks = line.split()
    if len(toks) != expected:
        raise CorruptModelFile(f"expected {expected} values, found {len(toks)}")
    try:
        return np.array([float(t) for t in toks], dtype=np.float64)
    except ValueError:
        raise CorruptModelFile("unparsable parameter value") from None


def save_model(model: ScoringModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(model))


def load_model(path: str) -> ScoringModel:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())
