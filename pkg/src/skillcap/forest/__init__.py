"""Random forests and the evaluation harnesses built on them."""

from .evaluation import (
    TASKS,
    CurvePoint,
    EvalReport,
    assign_folds,
    cross_validate,
    curve_csv,
    current_score,
    game_targets,
    window_matrix,
    windowed_evaluation,
)
from .model import (
    CLASSIFICATION,
    FORMAT_ID,
    REGRESSION,
    ForestError,
    ForestModel,
    ForestParams,
    feature_importance,
    model_from_json,
    model_to_json,
    predict,
    predict_many,
    train,
)

__all__ = [
    "CLASSIFICATION",
    "FORMAT_ID",
    "REGRESSION",
    "TASKS",
    "CurvePoint",
    "EvalReport",
    "ForestError",
    "ForestModel",
    "ForestParams",
    "assign_folds",
    "cross_validate",
    "current_score",
    "curve_csv",
    "feature_importance",
    "game_targets",
    "model_from_json",
    "model_to_json",
    "predict",
    "predict_many",
    "train",
    "window_matrix",
    "windowed_evaluation",
]
