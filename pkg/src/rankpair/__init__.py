"""Pairwise ranking losses for dense object detection at desk scale.

The library splits into six parts: ``distance`` (pairwise distance
functions with closed-form derivatives), ``rankloss`` (precision loss,
error-driven updates, and the adaptive pairwise error family),
``assign`` (ranking-pair selection and positive/negative assignment,
including a from-scratch two-component GMM), ``geometry`` (IoU/GIoU/NMS),
``evaluation`` (AP and correlation oracles), and ``harness`` (synthetic
scenes, toy training, gradient checking, and the CLI's experiment
plumbing).
"""

__version__ = "0.1.0"

from .assign import (
    AdaptiveNegativeSets,
    AssignerConfig,
    AssignerOutcome,
    GmmModel,
    arps,
    assigner_config_from_dict,
    assigner_config_to_dict,
    gmm_fit_two_component,
    iou_threshold_assign,
    normalize_per_instance,
    paa_star_assign,
)
from .distance import (
    CeSigmoid,
    DistanceFunction,
    PiecewiseStep,
    Sigmoid,
    ce_sigmoid_distance,
    distance_from_dict,
    distance_to_dict,
    piecewise_step,
    sigmoid_distance,
)
from .errors import (
    ConfigError,
    DegenerateDenominatorError,
    DegenerateInputError,
    DivergenceError,
    RankPairError,
    UndefinedMetricError,
)
from .evaluation import (
    EvalReport,
    average_precision,
    coco_style_ap,
    correlations,
    detection_report,
    match_predictions,
)
from .geometry import giou, giou_loss, giou_loss_with_grad, iou, iou_matrix, nms
from .harness import (
    GradCheckReport,
    ScenarioConfig,
    TrainerConfig,
    TrainingTrajectory,
    generate_instance,
    grad_check,
    random_instance,
    run_experiment,
    scenario_from_dict,
    scenario_to_dict,
    sweep_experiment,
    train_toy,
)
from .rankloss import (
    BalanceConstant,
    DetectionInstance,
    GradientVector,
    LossConfig,
    PairPlan,
    RankSum,
    Role,
    ValidNegativeCount,
    ape_loss,
    balance_from_dict,
    balance_to_dict,
    build_pair_plan,
    error_driven_gradients,
    evaluate_pair_plan,
    loss_config_from_dict,
    loss_config_to_dict,
    pairwise_error_loss,
    plain_negative_sets,
    precision_loss,
    top_q_truncate,
    valid_negative_filter,
)

__all__ = [
    "__version__",
    # errors
    "RankPairError",
    "UndefinedMetricError",
    "DegenerateDenominatorError",
    "DegenerateInputError",
    "ConfigError",
    "DivergenceError",
    # distance
    "PiecewiseStep",
    "Sigmoid",
    "CeSigmoid",
    "DistanceFunction",
    "piecewise_step",
    "sigmoid_distance",
    "ce_sigmoid_distance",
    "distance_from_dict",
    "distance_to_dict",
    # rankloss
    "Role",
    "DetectionInstance",
    "GradientVector",
    "RankSum",
    "ValidNegativeCount",
    "BalanceConstant",
    "LossConfig",
    "PairPlan",
    "precision_loss",
    "error_driven_gradients",
    "pairwise_error_loss",
    "ape_loss",
    "valid_negative_filter",
    "top_q_truncate",
    "build_pair_plan",
    "evaluate_pair_plan",
    "plain_negative_sets",
    "balance_from_dict",
    "balance_to_dict",
    "loss_config_from_dict",
    "loss_config_to_dict",
    # assign
    "AdaptiveNegativeSets",
    "AssignerOutcome",
    "AssignerConfig",
    "GmmModel",
    "arps",
    "iou_threshold_assign",
    "normalize_per_instance",
    "gmm_fit_two_component",
    "paa_star_assign",
    "assigner_config_from_dict",
    "assigner_config_to_dict",
    # geometry
    "iou",
    "iou_matrix",
    "giou",
    "giou_loss",
    "giou_loss_with_grad",
    "nms",
    # evaluation
    "EvalReport",
    "average_precision",
    "coco_style_ap",
    "correlations",
    "detection_report",
    "match_predictions",
    # harness
    "ScenarioConfig",
    "TrainerConfig",
    "TrainingTrajectory",
    "GradCheckReport",
    "generate_instance",
    "train_toy",
    "grad_check",
    "random_instance",
    "run_experiment",
    "sweep_experiment",
    "scenario_from_dict",
    "scenario_to_dict",
]
