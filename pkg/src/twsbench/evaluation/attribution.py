"""
Per-step attribution: occlusion importance for any split predictor, mean
attention for attention models, and the spread of per-basin linear
coefficients.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Mapping

import numpy as np
import pandas as pd

from twsbench.core.errors import ManifestMismatchError, ModelWithoutAttentionError, UntrainedModelError
from twsbench.evaluation.summaries import DistributionSummary, summarize
from twsbench.features.assemble import N_DYNAMIC, SupervisedSplit
from twsbench.models.classical.linear import LinearModel

ATTRIBUTION_COLUMNS = ["model", "seq_len", "step", "importance", "method"]


@dataclass(frozen=True)
class AttributionReport:
    """Steps run 1..L, with L the most recent input step."""

    model: str
    seq_len: int
    importance: np.ndarray
    method: str

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "model": self.model,
                "seq_len": self.seq_len,
                "step": step + 1,
                "importance": float(value),
                "method": self.method,
            }
            for step, value in enumerate(self.importance)
        ]


def _check_trained(model: Any) -> None:
    if not getattr(model, "trained", True):
        raise UntrainedModelError(f"{type(model).__name__} has not been trained")


def occlusion_importance(model: Any, split: SupervisedSplit, name: str = "") -> AttributionReport:
    """
    Mean |change in prediction| when one step's dynamic channels are set to
    their training mean (0 after scaling).

    Args:
        model: Anything with predict_split(split) -> (n, H) scaled predictions
        split: Examples to attribute over
        name: Model label for the report

    Returns:
        AttributionReport; per-basin means averaged across basins
    """
    _check_trained(model)
    base = np.asarray(model.predict_split(split), dtype=np.float64).reshape(len(split), -1)
    basin_ids = split.basin_ids.astype(str)
    basins = sorted(set(basin_ids.tolist()))

    importance = np.zeros(split.seq_len)
    for step in range(split.seq_len):
        occluded = split.sequence.copy()
        occluded[:, step, :N_DYNAMIC] = 0.0
        changed = np.asarray(model.predict_split(split.with_sequence(occluded)), dtype=np.float64)
        delta = np.abs(changed.reshape(base.shape) - base).mean(axis=1)
        importance[step] = np.mean([delta[basin_ids == b].mean() for b in basins])
    return AttributionReport(model=name, seq_len=split.seq_len, importance=importance, method="occlusion")


def mean_attention(model: Any, split: SupervisedSplit, name: str = "") -> AttributionReport:
    """Head-mean attention averaged over examples, rescaled to sum to 1."""
    attention = getattr(model, "attention", None)
    if not callable(attention):
        raise ModelWithoutAttentionError(f"{type(model).__name__} exposes no attention weights")
    _check_trained(model)
    weights = np.asarray(attention(split.sequence, split.static), dtype=np.float64)
    mean = weights.mean(axis=0)
    return AttributionReport(model=name, seq_len=split.seq_len, importance=mean / mean.sum(), method="attention")


def attribution_frame(reports: List[AttributionReport]) -> pd.DataFrame:
    return pd.DataFrame([row for report in reports for row in report.rows()], columns=ATTRIBUTION_COLUMNS)


@dataclass(frozen=True)
class CoefficientSummary:
    feature: str
    summary: DistributionSummary
    global_value: float

    @property
    def global_inside_iqr(self) -> bool:
        return self.summary.q1 <= self.global_value <= self.summary.q3


def coefficient_distribution(
    basin_models: Mapping[str, LinearModel],
    global_model: LinearModel,
) -> List[CoefficientSummary]:
    """
    Box-plot statistics of every feature's weight across basin models, with
    the pooled model's weight alongside.
    """
    if not basin_models:
        raise ManifestMismatchError("no basin models to summarize")
    names = global_model.feature_names
    for basin_id, model in sorted(basin_models.items()):
        if model.feature_names != names or model.weights.shape != global_model.weights.shape:
            raise ManifestMismatchError(f"basin {basin_id} model uses a different feature manifest")
    if names is None:
        names = [f"x{i}" for i in range(global_model.weights.shape[0])]

    weights = np.stack([model.weights for _, model in sorted(basin_models.items())])
    return [
        CoefficientSummary(feature=feature, summary=summarize(weights[:, j]), global_value=float(global_model.weights[j]))
        for j, feature in enumerate(names)
    ]


def coefficient_frame(summaries: List[CoefficientSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"feature": s.feature, **s.summary.box_row(), "global": s.global_value} for s in summaries]
    )
