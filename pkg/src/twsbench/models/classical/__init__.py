"""
Classical baselines: OLS (per basin / pooled), CART trees, random forests,
histogram gradient boosting and per-basin grid search.
"""

from .boosted import BoostedModel, HistogramBinner, fit_boosted
from .forest import ForestModel, fit_forest
from .grid_search import GridSearchResult, GridSearchSpec, grid_search
from .linear import LinearModel, fit_linear_glob, fit_linear_single, fit_ols
from .storage import dump_model, load_model, read_model, save_model
from .tree import TreeNode, best_split, fit_tree

__all__ = [
    "LinearModel",
    "fit_ols",
    "fit_linear_single",
    "fit_linear_glob",
    "TreeNode",
    "fit_tree",
    "best_split",
    "ForestModel",
    "fit_forest",
    "BoostedModel",
    "HistogramBinner",
    "fit_boosted",
    "GridSearchSpec",
    "GridSearchResult",
    "grid_search",
    "dump_model",
    "load_model",
    "save_model",
    "read_model",
]
