"""
Evaluation: skill metrics, Mann-Whitney tests, distribution summaries,
trends, attribution and model rankings.
"""

from .attribution import (
    AttributionReport,
    CoefficientSummary,
    attribution_frame,
    coefficient_distribution,
    coefficient_frame,
    mean_attention,
    occlusion_importance,
)
from .comparison import cdf_frame, compare_models, metric_sample, pairwise_significance, significance_rows
from .metrics import MetricSet, compute_metrics, evaluate_basins, metric_matrix, metric_rows
from .ranking import best_counts, orientation_key, rank_models, skill_difference
from .significance import SignificanceResult, mann_whitney_u
from .summaries import (
    DistributionSummary,
    TrendEstimate,
    boxplot_stats,
    empirical_cdf,
    summarize,
    trend_estimate,
    trend_strata,
)

__all__ = [
    "MetricSet",
    "compute_metrics",
    "evaluate_basins",
    "metric_rows",
    "metric_matrix",
    "SignificanceResult",
    "mann_whitney_u",
    "compare_models",
    "metric_sample",
    "pairwise_significance",
    "significance_rows",
    "cdf_frame",
    "DistributionSummary",
    "summarize",
    "empirical_cdf",
    "boxplot_stats",
    "TrendEstimate",
    "trend_estimate",
    "trend_strata",
    "AttributionReport",
    "occlusion_importance",
    "mean_attention",
    "attribution_frame",
    "CoefficientSummary",
    "coefficient_distribution",
    "coefficient_frame",
    "rank_models",
    "best_counts",
    "skill_difference",
    "orientation_key",
]
