"""
Distribution summaries (empirical CDF, box-plot statistics) and linear
trend estimation.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.stats import linregress

from twsbench.core.errors import DegenerateError, EmptySampleError
from twsbench.dataset.types import BasinSeries
from twsbench.utils.constants import SIGNIFICANCE_LEVEL

WHISKER_IQR = 1.5


@dataclass(frozen=True)
class DistributionSummary:
    """
    Quartiles use linear interpolation between order statistics. Whiskers
    are the most extreme values within 1.5 IQR of the quartiles.
    """

    n: int
    cdf_x: np.ndarray
    cdf_p: np.ndarray
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: List[float] = field(default_factory=list)
    mean: float = float("nan")

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def box_row(self) -> Dict[str, float]:
        return {
            "n": self.n,
            "mean": self.mean,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "n_outliers": len(self.outliers),
        }


def _clean(values: Sequence[float]) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise EmptySampleError("cannot summarize an empty sample")
    return values


def summarize(values: Sequence[float]) -> DistributionSummary:
    """CDF and box-plot statistics of the finite entries of values."""
    values = np.sort(_clean(values))
    x, counts = np.unique(values, return_counts=True)
    p = np.cumsum(counts) / values.size

    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    low, high = q1 - WHISKER_IQR * (q3 - q1), q3 + WHISKER_IQR * (q3 - q1)
    inside = values[(values >= low) & (values <= high)]
    return DistributionSummary(
        n=int(values.size),
        cdf_x=x,
        cdf_p=p,
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=[float(v) for v in values[(values < low) | (values > high)]],
        mean=float(values.mean()),
    )


def empirical_cdf(values: Sequence[float]) -> DistributionSummary:
    """Step CDF at the sorted distinct values, rising to 1."""
    return summarize(values)


def boxplot_stats(values: Sequence[float]) -> DistributionSummary:
    return summarize(values)


@dataclass(frozen=True)
class TrendEstimate:
    slope: float
    stderr: float
    p_value: float
    n: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL

    @property
    def direction(self) -> str:
        if not self.significant or self.slope == 0:
            return "none"
        return "negative" if self.slope < 0 else "positive"


def trend_estimate(values: Sequence[float]) -> TrendEstimate:
    """
    OLS slope of values against their step index, with a two-sided t-test.

    Returns:
        Slope in units per step (mm/month for monthly TWS)
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size < 3:
        raise DegenerateError(f"trend needs at least 3 values, got {values.size}")
    if np.ptp(values) == 0:
        return TrendEstimate(slope=0.0, stderr=0.0, p_value=1.0, n=int(values.size))
    fit = linregress(np.arange(values.size, dtype=np.float64), values)
    p_value = float(fit.pvalue) if np.isfinite(fit.pvalue) else 0.0
    return TrendEstimate(slope=float(fit.slope), stderr=float(fit.stderr), p_value=p_value, n=int(values.size))


def trend_strata(series: Sequence[BasinSeries]) -> Dict[str, str]:
    """Basin -> negative / positive / none from the full-record TWS trend at 5%."""
    return {s.basin_id: trend_estimate(s.target).direction for s in sorted(series, key=lambda s: s.basin_id)}
