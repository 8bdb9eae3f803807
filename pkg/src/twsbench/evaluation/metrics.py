"""
Skill metrics in physical units: bias, RMSE, Pearson r, NSE, KGE and the
median (pinball) loss.

Population (1/T) moments throughout. Undefined metrics are NaN with their
flag cleared, never fabricated.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from twsbench.core.errors import EmptySampleError, NonFiniteInputError
from twsbench.models.neural.loss import median_loss
from twsbench.utils.constants import KGE_MEAN_GUARD, METRICS

METRIC_COLUMNS = ["basin_id", "model", "experiment", "metric", "value", "defined"]


@dataclass(frozen=True)
class MetricSet:
    bias: float
    rmse: float
    corr: float
    nse: float
    kge: float
    median_loss: float
    defined: Dict[str, bool] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRICS}

    def is_defined(self, name: str) -> bool:
        return self.defined.get(name, True)


def compute_metrics(y_true: Sequence[float], y_pred: Sequence[float]) -> MetricSet:
    """
    Score one prediction series against the truth.

    NSE is undefined for a constant truth, r for a constant series, and KGE
    additionally when |mean(y_true)| < 1e-9 * (std(y_true) + 1e-12).
    """
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise EmptySampleError(f"need equal nonzero lengths, got {y_true.size} and {y_pred.size}")
    if not (np.isfinite(y_true).all() and np.isfinite(y_pred).all()):
        raise NonFiniteInputError("metric inputs contain NaN/inf")

    diff = y_pred - y_true
    bias = float(np.mean(diff))
    rmse = float(np.sqrt(np.mean(diff**2)))

    mu_true, mu_pred = np.mean(y_true), np.mean(y_pred)
    sd_true, sd_pred = np.std(y_true), np.std(y_pred)
    sst = np.sum((y_true - mu_true) ** 2)

    nse_ok = sst > 0
    nse = float(1.0 - np.sum(diff**2) / sst) if nse_ok else float("nan")

    corr_ok = sd_true > 0 and sd_pred > 0
    corr = float("nan")
    if corr_ok:
        corr = float(np.mean((y_true - mu_true) * (y_pred - mu_pred)) / (sd_true * sd_pred))
        corr = float(np.clip(corr, -1.0, 1.0))

    kge_ok = corr_ok and abs(mu_true) >= KGE_MEAN_GUARD * (sd_true + 1e-12)
    kge = float("nan")
    if kge_ok:
        alpha = sd_pred / sd_true
        beta = mu_pred / mu_true
        kge = float(1.0 - np.sqrt((corr - 1.0) ** 2 + (alpha - 1.0) ** 2 + (beta - 1.0) ** 2))

    return MetricSet(
        bias=bias,
        rmse=rmse,
        corr=corr,
        nse=nse,
        kge=kge,
        median_loss=median_loss(y_true, y_pred),
        defined={
            "bias": True,
            "rmse": True,
            "corr": bool(corr_ok),
            "nse": bool(nse_ok),
            "kge": bool(kge_ok),
            "median_loss": True,
        },
    )


def metric_rows(
    metrics: MetricSet,
    basin_id: str,
    model: str,
    experiment: str,
) -> List[Dict[str, object]]:
    return [
        {
            "basin_id": basin_id,
            "model": model,
            "experiment": experiment,
            "metric": name,
            "value": value,
            "defined": metrics.is_defined(name),
        }
        for name, value in metrics.as_dict().items()
    ]


def evaluate_basins(
    basin_ids: Sequence[str],
    y_true: np.ndarray,
    y_pred: np.ndarray,
    model: str,
    experiment: str,
    lead: Optional[int] = None,
) -> pd.DataFrame:
    """
    Per-basin metrics over pooled test rows.

    Args:
        basin_ids: Basin of each row
        y_true, y_pred: Physical-unit values, one per row
        model: Model name written to the table
        experiment: Experiment label
        lead: Forecast lead, added as a column when given

    Returns:
        Long metrics frame ordered by basin then metric
    """
    basin_ids = np.asarray(basin_ids).astype(str)
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    rows = []
    for basin_id in sorted(set(basin_ids.tolist())):
        picked = basin_ids == basin_id
        rows.extend(metric_rows(compute_metrics(y_true[picked], y_pred[picked]), basin_id, model, experiment))
    frame = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    if lead is not None:
        frame.insert(3, "lead", lead)
    return frame


def metric_matrix(table: pd.DataFrame, metric: str) -> pd.DataFrame:
    """basin_id x model matrix of one metric; undefined cells are NaN."""
    picked = table[table["metric"] == metric].copy()
    picked.loc[~picked["defined"].astype(bool), "value"] = np.nan
    return picked.pivot(index="basin_id", columns="model", values="value")
