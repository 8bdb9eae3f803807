"""
Random forest: bootstrap-aggregated CART trees, no feature subsampling.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from twsbench.core.errors import InvalidParamsError
from twsbench.models.classical.tree import TreeNode, check_xy, fit_tree


@dataclass
class ForestModel:
    trees: List[TreeNode]
    seeds: List[int]
    params: Dict[str, Any] = field(default_factory=dict)
    bootstrap: bool = True

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.mean(np.stack([tree.predict(X) for tree in self.trees]), axis=0)


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int = 100,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    seed: int = 0,
    bootstrap: bool = True,
) -> ForestModel:
    """
    Fit n_estimators trees on full-size bootstrap resamples.

    Args:
        bootstrap: False fits every tree on the original rows (test hook)
    """
    X, y = check_xy(X, y)
    if n_estimators < 1:
        raise InvalidParamsError(f"n_estimators must be >= 1, got {n_estimators}")

    n = X.shape[0]
    children = np.random.SeedSequence(seed).spawn(n_estimators)
    seeds = [int(child.generate_state(1)[0]) for child in children]

    trees = []
    for tree_seed in seeds:
        if bootstrap:
            rows = np.random.default_rng(tree_seed).integers(0, n, size=n)
            Xt, yt = X[rows], y[rows]
        else:
            Xt, yt = X, y
        trees.append(fit_tree(Xt, yt, max_depth, min_samples_split, min_samples_leaf))

    params = {
        "n_estimators": n_estimators,
        "max_depth": max_depth,
        "min_samples_split": min_samples_split,
        "min_samples_leaf": min_samples_leaf,
    }
    logger.debug(f"Forest fit: {params}, {n} rows")
    return ForestModel(trees=trees, seeds=seeds, params=params, bootstrap=bootstrap)
