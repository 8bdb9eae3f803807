"""
Feature engineering: lag windows, month dummies, trend index, target
smoothing and supervised-set assembly.
"""

from .assemble import (
    SupervisedExample,
    SupervisedSet,
    SupervisedSplit,
    TaskSpec,
    assemble_supervised,
    check_leakage,
    flat_feature_names,
    flat_from_sequence,
    sequence_channel_names,
)
from .storage import save_feature_manifest
from .windows import (
    build_lag_window,
    month_dummies,
    month_dummy_matrix,
    smooth_target,
    trend_index,
)

__all__ = [
    "TaskSpec",
    "SupervisedExample",
    "SupervisedSplit",
    "SupervisedSet",
    "assemble_supervised",
    "check_leakage",
    "flat_feature_names",
    "flat_from_sequence",
    "sequence_channel_names",
    "build_lag_window",
    "month_dummies",
    "month_dummy_matrix",
    "smooth_target",
    "trend_index",
    "save_feature_manifest",
]
