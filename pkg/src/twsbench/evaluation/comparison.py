"""
Cross-model comparison tables: pairwise significance and metric CDFs.
"""

import itertools
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from twsbench.evaluation.significance import SignificanceResult, mann_whitney_u
from twsbench.evaluation.summaries import empirical_cdf
from twsbench.utils.constants import TESTED_METRICS

SIGNIFICANCE_COLUMNS = ["model_a", "model_b", "metric", "alternative", "U", "p", "method"]


def metric_sample(table: pd.DataFrame, model: str, metric: str, basins: Optional[Sequence[str]] = None) -> np.ndarray:
    """Defined per-basin values of one model's metric, in basin order."""
    picked = table[(table["model"] == model) & (table["metric"] == metric) & table["defined"].astype(bool)]
    if basins is not None:
        picked = picked[picked["basin_id"].isin(list(basins))]
    return picked.sort_values("basin_id")["value"].to_numpy(dtype=np.float64)


def compare_models(
    table: pd.DataFrame,
    model_a: str,
    model_b: str,
    metric: str,
    alternative: str = "two-sided",
    basins: Optional[Sequence[str]] = None,
) -> SignificanceResult:
    return mann_whitney_u(
        metric_sample(table, model_a, metric, basins),
        metric_sample(table, model_b, metric, basins),
        alternative,
    )


def significance_rows(model_a: str, model_b: str, metric: str, result: SignificanceResult, **extra) -> Dict:
    return {
        "model_a": model_a,
        "model_b": model_b,
        "metric": metric,
        "alternative": result.alternative,
        "U": result.U,
        "p": result.p,
        "method": result.method,
        **extra,
    }


def pairwise_significance(
    table: pd.DataFrame,
    models: Optional[Sequence[str]] = None,
    metrics: Sequence[str] = TESTED_METRICS,
    alternative: str = "two-sided",
) -> pd.DataFrame:
    """Mann-Whitney rows for every model pair (alphabetical) and metric."""
    models = sorted(models if models is not None else table["model"].unique())
    rows = [
        significance_rows(a, b, metric, compare_models(table, a, b, metric, alternative))
        for metric in metrics
        for a, b in itertools.combinations(models, 2)
    ]
    return pd.DataFrame(rows, columns=SIGNIFICANCE_COLUMNS)


def cdf_frame(table: pd.DataFrame, metric: str, models: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Plot-ready empirical CDF of one metric across basins, per model."""
    models = sorted(models if models is not None else table["model"].unique())
    rows: List[Dict[str, object]] = []
    for model in models:
        sample = metric_sample(table, model, metric)
        if sample.size == 0:
            continue
        cdf = empirical_cdf(sample)
        rows.extend({"model": model, "value": float(x), "cdf": float(p)} for x, p in zip(cdf.cdf_x, cdf.cdf_p))
    return pd.DataFrame(rows, columns=["model", "value", "cdf"])
