"""rankdistill: a learning-to-rank toolkit with listwise self-distillation.

Query-grouped datasets, ranking losses with analytic gradients, a small
feed-forward scorer with hand-derived backprop, NDCG evaluation, teacher
score transforms, a two-phase self-distillation trainer, and a toy-model
analysis of why distilled students can beat their teachers.
"""

from .data import (
    Dataset,
    DocRow,
    QueryList,
    SyntheticConfig,
    augment_gaussian,
    generate_synthetic,
    load_synthetic_config,
    parse_svmlight,
    split,
    write_svmlight,
)
from .distill import (
    AffineTransform,
    DistillSpec,
    SoftmaxTransform,
    TeacherScores,
    export_teacher_scores,
    load_teacher_scores,
    pointwise_distill_loss,
    student_loss,
    transform_scores,
    write_teacher_scores,
)
from .errors import RankDistillError
from .losses import LossKind, is_translation_invariant, loss_grad, loss_value
from .metrics import (
    MetricReport,
    Ranking,
    dcg,
    evaluate_dataset,
    ndcg_at_k,
    rank_by_scores,
)
from .model import (
    ForwardCache,
    ParamGrads,
    ScoringModel,
    backward,
    deserialize,
    forward,
    init_model,
    load_model,
    save_model,
    score_query,
    serialize,
)
from .theory import (
    NoisySimConfig,
    TheoryInstance,
    alpha_star,
    find_minima,
    gradient_descent_fitter,
    noisy_label_simulation,
    run_theorem1_demo,
    student_labels,
    toy_fitter,
    toy_loss,
)
from .training import (
    ComparisonReport,
    TrainConfig,
    TrainHistory,
    ensemble_scores,
    load_train_config,
    self_distill_pipeline,
    train,
)

__version__ = "0.1.0"
