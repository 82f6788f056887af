"""Data valuation for neural networks via self-weighting loss functions.

The package trains a model while learning one weight per training
instance; the weights are coupled to an optimal-transport distance between
the weighted training features and the validation features and read out as
importance scores. Reference valuators (leave-one-out, KNN-Shapley,
random) and a noisy-sample benchmark harness round out the toolkit.
"""

__version__ = "0.1.0"

from .core import (
    LossValConfig,
    MLPConfig,
    ModelState,
    ValuationResult,
    VARIANTS,
    downstream_parity,
    effective_weights,
    lossval_grad_weights,
    lossval_objective,
    train_plain,
    train_with_lossval,
)
from .data import (
    Dataset,
    SplitSpec,
    load_csv,
    save_csv,
    split_standardize,
    synth_blobs,
    synth_friedman1,
)
from .bench import (
    BenchmarkConfig,
    CurveReport,
    DetectionReport,
    ExperimentReport,
    NoiseSpec,
    detection_curve,
    inject_noise,
    point_addition,
    point_removal,
    run_benchmark,
)
from .valuators import (
    EvaluatorSpec,
    knn_shapley,
    loo_valuation,
    random_valuation,
)
from .ot import TransportPlan, cost_matrix, ot_grad_weights, sinkhorn
from .losses import loss_grads, weighted_cross_entropy, weighted_mse
from .nn import AdamState, MLPParams, adam_step, init_mlp, mlp_backward, mlp_forward
from .errors import ConfigError, LossValError, NumericError, ParseError, ShapeError

__all__ = [
    "AdamState",
    "BenchmarkConfig",
    "ConfigError",
    "CurveReport",
    "Dataset",
    "DetectionReport",
    "EvaluatorSpec",
    "ExperimentReport",
    "LossValConfig",
    "LossValError",
    "MLPConfig",
    "MLPParams",
    "ModelState",
    "NoiseSpec",
    "NumericError",
    "ParseError",
    "ShapeError",
    "SplitSpec",
    "TransportPlan",
    "ValuationResult",
    "VARIANTS",
    "adam_step",
    "cost_matrix",
    "detection_curve",
    "downstream_parity",
    "effective_weights",
    "inject_noise",
    "init_mlp",
    "knn_shapley",
    "load_csv",
    "loo_valuation",
    "loss_grads",
    "lossval_grad_weights",
    "lossval_objective",
    "mlp_backward",
    "mlp_forward",
    "ot_grad_weights",
    "point_addition",
    "point_removal",
    "random_valuation",
    "run_benchmark",
    "save_csv",
    "sinkhorn",
    "split_standardize",
    "synth_blobs",
    "synth_friedman1",
    "train_plain",
    "train_with_lossval",
    "weighted_cross_entropy",
    "weighted_mse",
]
