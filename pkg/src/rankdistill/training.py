"""Mini-batch training of rankers and the two-phase self-distillation pipeline.

A batch is a set of whole query lists; losses never cross query boundaries
and the batch objective is the unweighted mean of per-query losses. The
optimizer is Adam with bias correction. Early stopping tracks validation
NDCG@5 and the returned model is the snapshot from the best epoch.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, augment_gaussian
from .distill import (
    AffineTransform,
    DistillSpec,
    SoftmaxTransform,
    TeacherScores,
    export_teacher_scores,
    student_loss,
    transform_scores,
)
from .errors import AlignmentError, InvalidConfig, NonFiniteLoss, ShapeMismatch
from .losses import LossKind, loss_grad, loss_value
from .metrics import MetricReport, evaluate_dataset, ndcg_at_k
from .model import ScoringModel, backward, forward_features, init_model


@dataclass
class TrainConfig:
    layer_dims: list[int]
    loss: LossKind = LossKind.SOFTMAX
    distill: DistillSpec | None = None
    learning_rate: float = 0.01
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    batch_queries: int = 64
    max_epochs: int = 200
    patience: int = 20
    dropout_rate: float = 0.0
    augment_sigma: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise InvalidConfig("learning_rate must be positive")
        if self.patience < 1:
            raise InvalidConfig("patience must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidConfig("dropout_rate must be in [0, 1)")
        if self.batch_queries < 1:
            raise InvalidConfig("batch_queries must be >= 1")
        if self.max_epochs < 1:
            raise InvalidConfig("max_epochs must be >= 1")
        if self.augment_sigma < 0:
            raise InvalidConfig("augment_sigma must be >= 0")


def load_train_config(path: str) -> TrainConfig:
    """Read a TrainConfig from a JSON file keyed by the field names."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return train_config_from_dict(raw)


def train_config_from_dict(raw: dict) -> TrainConfig:
    raw = dict(raw)
    known = set(TrainConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    if "layer_dims" not in raw:
        raise InvalidConfig("layer_dims is required")
    if "loss" in raw:
        raw["loss"] = LossKind.from_name(raw["loss"])
    if "adam_betas" in raw:
        raw["adam_betas"] = tuple(raw["adam_betas"])
    if raw.get("distill") is not None:
        raw["distill"] = _distill_spec_from_dict(raw["distill"])
    cfg = TrainConfig(**raw)
    cfg.validate()
    return cfg


def _distill_spec_from_dict(raw: dict) -> DistillSpec:
    raw = dict(raw)
    tr = raw.get("transform", {"kind": "affine"})
    kind = tr.get("kind", "affine")
    if kind == "affine":
        transform = AffineTransform(a=tr.get("a", 1.0), b=tr.get("b", 0.0))
    elif kind in ("softmax_t", "softmax"):
        transform = SoftmaxTransform(temperature=tr.get("temperature", 1.0))
    else:
        raise InvalidConfig(f"unknown transform kind {kind!r}")
    return DistillSpec(
        alpha=raw.get("alpha", 0.5),
        transform=transform,
        base_loss=LossKind.from_name(raw.get("base_loss", "softmax")),
        distill_loss=LossKind.from_name(raw.get("distill_loss", "softmax")),
    )


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_ndcg5: list[float] = field(default_factory=list)
    valid_ndcg5: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def n_epochs(self) -> int:
        return len(self.train_loss)

    def best_valid_ndcg5(self) -> float:
        return self.valid_ndcg5[self.best_epoch]

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,train_ndcg5,valid_ndcg5"]
        for e in range(self.n_epochs):
            lines.append(f"{e},{self.train_loss[e]:.8g},"
                         f"{self.train_ndcg5[e]:.8g},{self.valid_ndcg5[e]:.8g}")
        return "\n".join(lines) + "\n"


class Adam:
    """Adam with bias correction over a model's weight/bias lists."""

    def __init__(self, model: ScoringModel, learning_rate: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.lr = learning_rate
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in model.weights]
        self.v_w = [np.zeros_like(w) for w in model.weights]
        self.m_b = [np.zeros_like(b) for b in model.biases]
        self.v_b = [np.zeros_like(b) for b in model.biases]

    def step(self, model: ScoringModel, grads: ParamGrads) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for i in range(model.n_layers):
            for params, g, m, v in (
                (model.weights[i], grads.d_weights[i], self.m_w[i], self.v_w[i]),
                (model.biases[i], grads.d_biases[i], self.m_b[i], self.v_b[i]),
            ):
                m *= self.b1
                m += (1.0 - self.b1) * g
                v *= self.b2
                v += (1.0 - self.b2) * g * g
                params -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# --- batched helpers --------------------------------------------------------

def _score_dataset(model: ScoringModel, ds: Dataset) -> list[np.ndarray]:
    """Inference scores for every query via one stacked forward pass."""
    if ds.n_queries == 0:
        return []
    counts = [ql.n_docs for ql in ds.query_lists]
    stacked = np.vstack([ql.features for ql in ds.query_lists])
    scores, _ = forward_features(model, stacked, training=False)
    return np.split(scores, np.cumsum(counts)[:-1])


def _mean_ndcg5(model: ScoringModel, ds: Dataset) -> float:
    per_query = _score_dataset(model, ds)
    vals = [ndcg_at_k(s, ql.labels, 5)
            for s, ql in zip(per_query, ds.query_lists)]
    return float(np.mean(vals)) if vals else 0.0


def _check_teacher_alignment(ts: TeacherScores, ds: Dataset) -> None:
    for ql in ds.query_lists:
        if ql.qid not in ts.by_qid:
            raise AlignmentError(ql.qid, "no teacher scores for this query")
        if len(ts.by_qid[ql.qid]) != ql.n_docs:
            raise AlignmentError(
                ql.qid, f"{len(ts.by_qid[ql.qid])} teacher scores for "
                        f"{ql.n_docs} documents")


# --- training ---------------------------------------------------------------

def train(cfg: TrainConfig, train_ds: Dataset, valid_ds: Dataset,
          teacher_scores: TeacherScores | None = None
          ) -> tuple[ScoringModel, TrainHistory]:
    """Train a scorer; returns the best-validation-epoch model and history.

    When ``cfg.distill`` is set, ``teacher_scores`` must align with
    ``train_ds`` and the per-query objective becomes the blended
    self-distillation loss on (labels, transformed teacher scores).
    """
    cfg.validate()
    if train_ds.feature_count != cfg.layer_dims[0]:
        raise ShapeMismatch(
            f"dataset has {train_ds.feature_count} features, config expects "
            f"{cfg.layer_dims[0]}")

    transformed: dict[str, np.ndarray] | None = None
    if cfg.distill is not None:
        if teacher_scores is None:
            raise AlignmentError("?", "distillation requires teacher scores")
        _check_teacher_alignment(teacher_scores, train_ds)
        transformed = {
            ql.qid: transform_scores(cfg.distill.transform,
                                     teacher_scores.by_qid[ql.qid])
            for ql in train_ds.query_lists
        }

    seeds = np.random.SeedSequence(cfg.seed).spawn(4)
    init_seed = seeds[0]
    shuffle_rng = np.random.default_rng(seeds[1])
    dropout_rng = np.random.default_rng(seeds[2])
    augment_rng = np.random.default_rng(seeds[3])

    model = init_model(cfg.layer_dims, seed=init_seed,
                       dropout_rate=cfg.dropout_rate)
    adam = Adam(model, cfg.learning_rate, cfg.adam_betas, cfg.adam_eps)
    history = TrainHistory()

    best_valid = -np.inf
    best_model = model.copy()
    n_queries = train_ds.n_queries

    for epoch in range(cfg.max_epochs):
        tic = time.perf_counter()
        order = shuffle_rng.permutation(n_queries)
        epoch_loss = 0.0

        for batch_no, start in enumerate(range(0, n_queries, cfg.batch_queries)):
            batch = order[start:start + cfg.batch_queries]
            queries = [train_ds.query_lists[i] for i in batch]
            if cfg.augment_sigma > 0.0:
                queries = [augment_gaussian(ql, cfg.augment_sigma, augment_rng)
                           for ql in queries]

            counts = [ql.n_docs for ql in queries]
            stacked = np.vstack([ql.features for ql in queries])
            # divergence is detected by the finiteness check below, so the
            # intermediate overflow warnings are redundant noise
            with np.errstate(over="ignore", invalid="ignore"):
                scores, cache = forward_features(model, stacked, training=True,
                                                 rng=dropout_rng)

                batch_loss = 0.0
                dl_ds = np.empty_like(scores)
                offset = 0
                scale = 1.0 / len(queries)
                for ql, n in zip(queries, counts):
                    sl = slice(offset, offset + n)
                    if cfg.distill is not None:
                        value, grad = student_loss(
                            ql.labels, transformed[ql.qid], scores[sl],
                            cfg.distill)
                    else:
                        value = loss_value(cfg.loss, ql.labels, scores[sl])
                        grad = loss_grad(cfg.loss, ql.labels, scores[sl])
                    batch_loss += value
                    dl_ds[sl] = grad * scale
                    offset += n

                batch_loss *= scale
                epoch_loss += batch_loss * len(queries)
                if not np.isfinite(batch_loss):
                    raise NonFiniteLoss(epoch, batch_no)

                adam.step(model, backward(model, cache, dl_ds))

        history.train_loss.append(epoch_loss / n_queries)
        history.train_ndcg5.append(_mean_ndcg5(model, train_ds))
        history.valid_ndcg5.append(_mean_ndcg5(model, valid_ds))
        history.epoch_seconds.append(time.perf_counter() - tic)

        if history.valid_ndcg5[-1] > best_valid:
            best_valid = history.valid_ndcg5[-1]
            best_model = model.copy()
            history.best_epoch = epoch
        elif epoch - history.best_epoch >= cfg.patience:
            break

    return best_model, history


# --- self-distillation pipeline ---------------------------------------------

@dataclass
class ComparisonReport:
    """Teacher vs student test metrics (and histories) from one pipeline run."""

    teacher: MetricReport
    student: MetricReport
    teacher_history: TrainHistory | None = None
    student_history: TrainHistory | None = None

    def to_text(self) -> str:
        ks = self.teacher.ks
        lines = ["model\t" + "\t".join(f"ndcg@{k}" for k in ks)]
        lines.append("teacher\t" + "\t".join(
            f"{v:.6f}" for v in self.teacher.means))
        lines.append("student\t" + "\t".join(
            f"{v:.6f}" for v in self.student.means))
        lines.append("delta\t" + "\t".join(
            f"{s - t:+.6f}" for t, s in zip(self.teacher.means,
                                            self.student.means)))
        return "\n".join(lines) + "\n"


def self_distill_pipeline(
    teacher_cfg: TrainConfig,
    student_overrides: dict | None,
    datasets: tuple[Dataset, Dataset, Dataset],
    ks=(1, 5, 10),
) -> tuple[ScoringModel, ScoringModel, ComparisonReport]:
    """Two-phase self-distillation over (train, valid, test) datasets.

    Phase 1 trains the teacher with its base loss. Phase 2 exports the
    teacher's inference scores on the training split and trains a student
    of identical architecture from a fresh initialization with the blended
    objective. The student may only differ in training hyperparameters:
    overriding ``layer_dims`` is a configuration error.
    """
    overrides = dict(student_overrides or {})
    if teacher_cfg.distill is not None:
        raise InvalidConfig("teacher config must not itself distill")
    if "layer_dims" in overrides and \
            list(overrides["layer_dims"]) != list(teacher_cfg.layer_dims):
        raise InvalidConfig(
            "self-distillation requires identical teacher and student "
            "architectures")
    overrides.setdefault("seed", teacher_cfg.seed + 1)  # fresh init
    overrides.setdefault("distill", DistillSpec(alpha=0.5))

    train_ds, valid_ds, test_ds = datasets
    teacher, teacher_hist = train(teacher_cfg, train_ds, valid_ds)
    scores = export_teacher_scores(teacher, train_ds)

    student_cfg = replace(teacher_cfg, **overrides)
    student, student_hist = train(student_cfg, train_ds, valid_ds,
                                  teacher_scores=scores)

    report = ComparisonReport(
        teacher=evaluate_dataset(teacher, test_ds, ks=ks),
        student=evaluate_dataset(student, test_ds, ks=ks),
        teacher_history=teacher_hist,
        student_history=student_hist,
    )
    return teacher, student, report


def ensemble_scores(models: list[ScoringModel], ql) -> np.ndarray:
    """Arithmetic mean of per-model inference scores for one query list."""
    if not models:
        raise ShapeMismatch("need at least one model")
    dims = models[0].layer_dims
    for m in models[1:]:
        if m.layer_dims != dims:
            raise ShapeMismatch("ensemble members must share layer_dims")
    stacked = np.vstack([forward_features(m, ql.features)[0] for m in models])
    return stacked.mean(axis=0)
