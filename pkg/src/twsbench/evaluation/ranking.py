"""
Per-basin model rankings and skill differences over a long metrics table.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from twsbench.core.errors import InvalidParamsError, MissingCellError
from twsbench.utils.constants import ABS_IS_BETTER, HIGHER_IS_BETTER, LINEAR_SINGLE, LOWER_IS_BETTER

RANKING_COLUMNS = ["basin_id", "metric", "best", "best_value", "second", "second_value"]


def orientation_key(metric: str, value: float) -> float:
    """Sort key where smaller is better; NaN sorts after every real value."""
    if not np.isfinite(value):
        return np.inf
    if metric in HIGHER_IS_BETTER:
        return -value
    if metric in LOWER_IS_BETTER:
        return value
    if metric in ABS_IS_BETTER:
        return abs(value)
    raise InvalidParamsError(f"no ranking orientation for metric {metric!r}")


def _cells(table: pd.DataFrame, metric: str, models: Optional[Sequence[str]]) -> Dict[str, Dict[str, float]]:
    picked = table[table["metric"] == metric]
    if models is None:
        models = sorted(picked["model"].unique())
    cells: Dict[str, Dict[str, float]] = {}
    for row in picked.itertuples(index=False):
        if row.model in models:
            value = float(row.value) if bool(row.defined) else float("nan")
            cells.setdefault(str(row.basin_id), {})[row.model] = value
    for basin_id, by_model in cells.items():
        missing = sorted(set(models) - set(by_model))
        if missing:
            raise MissingCellError(f"basin {basin_id} has no {metric} for {missing}")
    return cells


def rank_models(
    table: pd.DataFrame,
    metric: str = "nse",
    models: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    """
    Best and second-best model of every basin.

    Args:
        table: Long metrics frame (basin_id, model, metric, value, defined)
        metric: Ranking metric
        models: Competing models; all models in the table by default

    Returns:
        One row per basin; ties go to the alphabetically first model and
        undefined values rank last
    """
    rows = []
    for basin_id, by_model in sorted(_cells(table, metric, models).items()):
        ranked = sorted(by_model.items(), key=lambda kv: (orientation_key(metric, kv[1]), kv[0]))
        best = ranked[0]
        second = ranked[1] if len(ranked) > 1 else (None, float("nan"))
        rows.append(
            {
                "basin_id": basin_id,
                "metric": metric,
                "best": best[0],
                "best_value": best[1],
                "second": second[0],
                "second_value": second[1],
            }
        )
    return pd.DataFrame(rows, columns=RANKING_COLUMNS)


def best_counts(rankings: pd.DataFrame, strata: Optional[Dict[str, str]] = None) -> pd.DataFrame:
    """How often each model is best / second-best, optionally per trend stratum."""
    frame = rankings.copy()
    frame["stratum"] = frame["basin_id"].map(strata) if strata else "all"
    rows: List[Dict[str, object]] = []
    for (stratum, metric), group in frame.groupby(["stratum", "metric"], sort=True):
        models = sorted(set(group["best"].dropna()) | set(group["second"].dropna()))
        for model in models:
            rows.append(
                {
                    "stratum": stratum,
                    "metric": metric,
                    "model": model,
                    "best": int((group["best"] == model).sum()),
                    "second": int((group["second"] == model).sum()),
                    "n_basins": int(len(group)),
                }
            )
    return pd.DataFrame(rows, columns=["stratum", "metric", "model", "best", "second", "n_basins"])


def skill_difference(
    table: pd.DataFrame,
    reference: str = LINEAR_SINGLE,
    metric: str = "nse",
) -> pd.DataFrame:
    """
    Per-basin metric of every model minus the reference model's value.

    Positive deltas mean better for nse/kge/corr and worse for rmse/median_loss.
    """
    cells = _cells(table, metric, None)
    rows = []
    for basin_id, by_model in sorted(cells.items()):
        if reference not in by_model:
            raise MissingCellError(f"basin {basin_id} has no {metric} for reference {reference}")
        for model, value in sorted(by_model.items()):
            if model == reference:
                continue
            rows.append(
                {
                    "basin_id": basin_id,
                    "model": model,
                    "reference": reference,
                    "metric": metric,
                    "delta": value - by_model[reference],
                }
            )
    return pd.DataFrame(rows, columns=["basin_id", "model", "reference", "metric", "delta"])
