"""Teacher score transformations and the blended self-distillation objective.

A trained teacher's raw scores are only meaningful up to order (and, for
translation-invariant losses, up to a constant shift), so before they can
serve as labels they pass through a transform ``g``:

* affine with clamp:  g(t) = max(a*t + b, 0), a > 0
* temperature softmax: g(t) = softmax(t / T), T > 0

The student objective blends the original loss on true labels with a
distillation loss on transformed teacher scores:

    (1 - alpha) * base_loss(y, s) + alpha * distill_loss(g(t), s)

Teacher scores are frozen constants: no gradient flows through g.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax as _softmax

from .data import Dataset
from .errors import AlignmentError, InvalidConfig, LengthMismatch
from .losses import LossKind, loss_grad, loss_value
from .model import ScoringModel, score_query, serialize


@dataclass(frozen=True)
class AffineTransform:
    """g(t) = max(a*t + b, 0); the intercept re-centers shift-invariant
    teacher scores and the slope dampens their scale."""

    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise InvalidConfig(f"affine slope must be positive: {self.a}")

    def apply(self, t: np.ndarray) -> np.ndarray:
        return np.maximum(self.a * np.asarray(t, dtype=np.float64) + self.b, 0.0)


@dataclass(frozen=True)
class SoftmaxTransform:
    """g(t) = softmax(t / temperature), computed with a max shift."""

    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise InvalidConfig(f"temperature must be positive: {self.temperature}")

    def apply(self, t: np.ndarray) -> np.ndarray:
        return _softmax(np.asarray(t, dtype=np.float64) / self.temperature)


TransformSpec = AffineTransform | SoftmaxTransform


def transform_scores(spec: TransformSpec, t) -> np.ndarray:
    """Apply a teacher-score transform; the output is non-negative."""
    return spec.apply(t)


@dataclass(frozen=True)
class DistillSpec:
    alpha: float
    transform: TransformSpec = field(default_factory=AffineTransform)
    base_loss: LossKind = LossKind.SOFTMAX
    distill_loss: LossKind = LossKind.SOFTMAX

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig(f"alpha must be in [0, 1]: {self.alpha}")


def student_loss(y, t_transformed, s, spec: DistillSpec
                 ) -> tuple[float, np.ndarray]:
    """Blended objective value and its gradient w.r.t. the student scores.

    alpha=0 reduces to plain training on labels, alpha=1 to the
    teacher-only objective; the value is exactly linear in alpha.
    """
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t_transformed, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if not (y.shape == t.shape == s.shape):
        raise LengthMismatch(
            f"shapes differ: y {y.shape}, teacher {t.shape}, s {s.shape}")
    a = spec.alpha
    value = ((1.0 - a) * loss_value(spec.base_loss, y, s)
             + a * loss_value(spec.distill_loss, t, s))
    grad = ((1.0 - a) * loss_grad(spec.base_loss, y, s)
            + a * loss_grad(spec.distill_loss, t, s))
    return value, grad


def pointwise_distill_loss(t_transformed, s) -> tuple[float, np.ndarray]:
    """Squared-error distillation, decomposed across documents independently.

    This is the pointwise ablation baseline; as a loss it coincides with
    the mse ranking loss applied to (g(t), s).
    """
    t = np.asarray(t_transformed, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if t.shape != s.shape:
        raise LengthMismatch(f"shapes differ: teacher {t.shape}, s {s.shape}")
    return loss_value(LossKind.MSE, t, s), loss_grad(LossKind.MSE, t, s)


# --- teacher scores --------------------------------------------------------

@dataclass
class TeacherScores:
    """Raw (untransformed) teacher scores aligned row-by-row with a Dataset.

    ``by_qid[qid][i]`` is the score of the dataset row whose position is i
    within that query (i.e. aligned with QueryList.features rows).
    """

    model_id: str
    by_qid: dict[str, np.ndarray]

    def for_query(self, qid: str) -> np.ndarray:
        return self.by_qid[qid]


def _model_fingerprint(model: ScoringModel) -> str:
    return hashlib.sha256(serialize(model).encode()).hexdigest()[:12]


def export_teacher_scores(model: ScoringModel, ds: Dataset) -> TeacherScores:
    """Inference-mode scores for every document of every query."""
    by_qid = {ql.qid: score_query(model, ql) for ql in ds.query_lists}
    return TeacherScores(model_id=_model_fingerprint(model), by_qid=by_qid)


def write_teacher_scores(ts: TeacherScores, ds: Dataset, stream=None) -> str | None:
    """TSV lines `qid<TAB>doc_id<TAB>score` under a `#teacher <id>` header."""
    out = stream if stream is not None else io.StringIO()
    out.write(f"#teacher {ts.model_id}\n")
    for ql in ds.query_lists:
        scores = ts.by_qid[ql.qid]
        for i in range(ql.n_docs):
            out.write(f"{ql.qid}\t{ql.doc_ids[i]}\t{repr(float(scores[i]))}\n")
    if stream is None:
        return out.getvalue()
    return None


def load_teacher_scores(source, ds: Dataset) -> TeacherScores:
    """Parse a teacher-score file and align it against a dataset.

    Rows may appear in any order within a query; scores are realigned via
    doc_id. Any qid/doc count mismatch against the dataset raises
    AlignmentError before training time is spent.
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    model_id = ""
    raw: dict[str, dict[int, float]] = {}
    for line_no, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#teacher"):
            model_id = line[len("#teacher"):].strip()
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise AlignmentError("?", f"bad score line {line_no}: {line!r}")
        qid, doc_s, score_s = parts
        try:
            doc_id = int(doc_s)
            score = float(score_s)
        except ValueError:
            raise AlignmentError(qid, f"bad score line {line_no}") from None
        per = raw.setdefault(qid, {})
        if doc_id in per:
            raise AlignmentError(qid, f"duplicate doc_id {doc_id}")
        per[doc_id] = score

    ds_qids = set(ds.qids())
    extra = set(raw) - ds_qids
    if extra:
        raise AlignmentError(sorted(extra)[0], "qid not present in dataset")

    by_qid: dict[str, np.ndarray] = {}
    for ql in ds.query_lists:
        if ql.qid not in raw:
            raise AlignmentError(ql.qid, "qid missing from score file")
        per = raw[ql.qid]
        if len(per) != ql.n_docs:
            raise AlignmentError(
                ql.qid, f"{len(per)} scores for {ql.n_docs} documents")
        try:
            by_qid[ql.qid] = np.array(
                [per[int(d)] for d in ql.doc_ids], dtype=np.float64)
        except KeyError as missing:
            raise AlignmentError(ql.qid, f"missing doc_id {missing}") from None
    return TeacherScores(model_id=model_id, by_qid=by_qid)
