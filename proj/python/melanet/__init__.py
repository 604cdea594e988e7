"""Imbalance-aware two-stage lesion classification pipeline."""

from ._core import (
    ConfigError,
    ConfusionCounts,
    DataError,
    EvalError,
    TrainingError,
    auc,
    confusion,
    focal_loss,
    focal_loss_batch,
    generate_benchmark,
    pad_and_resize,
    roc_curve,
    run_pipeline,
    run_stage,
    sensitivity,
    standardize,
)
from ._core import __version__

__all__ = [
    "ConfigError",
    "ConfusionCounts",
    "DataError",
    "EvalError",
    "TrainingError",
    "auc",
    "confusion",
    "focal_loss",
    "focal_loss_batch",
    "generate_benchmark",
    "pad_and_resize",
    "roc_curve",
    "run_pipeline",
    "run_stage",
    "sensitivity",
    "standardize",
    "__version__",
]
