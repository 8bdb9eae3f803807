"""
Gradient-boosted regression trees on feature histograms, grown leaf-wise.

Squared-error objective: each tree fits the current residuals, leaves hold
mean residuals, and the leaf with the largest gain is split next.
"""

import heapq
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from twsbench.core.errors import InvalidParamsError
from twsbench.models.classical.tree import TreeNode, check_xy
from twsbench.utils.constants import HIST_BINS


@dataclass
class HistogramBinner:
    """Per-feature split thresholds; bin b holds edges[b-1] < x <= edges[b]."""

    edges: List[np.ndarray]

    @classmethod
    def fit(cls, X: np.ndarray, n_bins: int = HIST_BINS) -> "HistogramBinner":
        edges = []
        for col in np.asarray(X, dtype=np.float64).T:
            uniq = np.unique(col)
            if uniq.size <= n_bins:
                edges.append(uniq[:-1])
            else:
                quantiles = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
                edges.append(np.unique(quantiles))
        return cls(edges)

    @property
    def max_bins(self) -> int:
        return max((e.size for e in self.edges), default=0) + 1

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.column_stack(
            [np.searchsorted(e, X[:, f], side="left") for f, e in enumerate(self.edges)]
        ).astype(np.int64)


@dataclass
class BoostedModel:
    init: float
    trees: List[TreeNode]
    learning_rate: float
    params: Dict[str, Any] = field(default_factory=dict)
    n_bins: int = HIST_BINS

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.init)
        for tree in self.trees:
            out = out + self.learning_rate * tree.predict(X)
        return out

    def staged_predict(self, X: np.ndarray) -> List[np.ndarray]:
        """Predictions after 0, 1, ..., n_estimators trees."""
        X = np.asarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.init)
        stages = [out]
        for tree in self.trees:
            out = out + self.learning_rate * tree.predict(X)
            stages.append(out)
        return stages


class _LeafwiseGrower:
    def __init__(self, binned: np.ndarray, binner: HistogramBinner, params: Dict[str, Any]):
        self.binned = binned
        self.edges = binner.edges
        self.n_features = binned.shape[1]
        self.n_slots = binner.max_bins
        self.flat_bins = binned + np.arange(self.n_features) * self.n_slots
        self.limits = np.array([e.size for e in self.edges])
        self.num_leaves = params["num_leaves"]
        self.max_depth = params["max_depth"]
        self.min_child = params["min_child_samples"]
        self.min_gain = params["min_gain_to_split"]

    def _candidate(self, idx: np.ndarray, residual: np.ndarray) -> Optional[Tuple[float, int, int]]:
        n = idx.size
        if n < 2 * self.min_child or self.n_slots < 2:
            return None
        r = residual[idx]
        p, slots = self.n_features, self.n_slots
        keys = self.flat_bins[idx].ravel()
        sums = np.bincount(keys, weights=np.repeat(r, p), minlength=p * slots).reshape(p, slots)
        counts = np.bincount(keys, minlength=p * slots).reshape(p, slots)

        left_sum = np.cumsum(sums, axis=1)[:, :-1]
        n_left = np.cumsum(counts, axis=1)[:, :-1].astype(np.float64)
        n_right = n - n_left
        total = r.sum()

        usable = np.arange(slots - 1)[None, :] < self.limits[:, None]
        valid = usable & (n_left >= self.min_child) & (n_right >= self.min_child)
        safe_left = np.where(valid, n_left, 1.0)
        safe_right = np.where(valid, n_right, 1.0)
        gain = left_sum**2 / safe_left + (total - left_sum) ** 2 / safe_right - total**2 / n
        gain = np.where(valid, gain, -np.inf)

        k = int(np.argmax(gain.ravel()))
        best = gain.ravel()[k]
        if not np.isfinite(best) or best <= self.min_gain:
            return None
        feature, bin_index = divmod(k, slots - 1)
        return float(best), int(feature), int(bin_index)

    def _may_split(self, depth: int) -> bool:
        return self.max_depth is None or depth < self.max_depth

    def grow(self, residual: np.ndarray) -> TreeNode:
        all_rows = np.arange(residual.shape[0])
        root = TreeNode(value=float(residual.mean()), n=int(all_rows.size))
        heap = []
        counter = 0

        def push(node, idx, depth):
            nonlocal counter
            if not self._may_split(depth):
                return
            found = self._candidate(idx, residual)
            if found is not None:
                gain, feature, bin_index = found
                heapq.heappush(heap, (-gain, counter, node, idx, depth, feature, bin_index))
                counter += 1

        push(root, all_rows, 0)
        leaves = 1
        while heap and leaves < self.num_leaves:
            _, _, node, idx, depth, feature, bin_index = heapq.heappop(heap)
            goes_left = self.binned[idx, feature] <= bin_index
            left_idx, right_idx = idx[goes_left], idx[~goes_left]
            node.feature = feature
            node.threshold = float(self.edges[feature][bin_index])
            node.left = TreeNode(value=float(residual[left_idx].mean()), n=int(left_idx.size))
            node.right = TreeNode(value=float(residual[right_idx].mean()), n=int(right_idx.size))
            leaves += 1
            push(node.left, left_idx, depth + 1)
            push(node.right, right_idx, depth + 1)
        return root


def _check_params(params: Dict[str, Any]) -> None:
    if params["n_estimators"] < 1:
        raise InvalidParamsError("n_estimators must be >= 1")
    if params["learning_rate"] <= 0:
        raise InvalidParamsError("learning_rate must be > 0")
    if params["num_leaves"] < 2:
        raise InvalidParamsError("num_leaves must be >= 2")
    if params["min_child_samples"] < 1:
        raise InvalidParamsError("min_child_samples must be >= 1")
    if params["max_depth"] is not None and params["max_depth"] < 1:
        raise InvalidParamsError("max_depth must be None or >= 1")
    if params["n_bins"] < 2:
        raise InvalidParamsError("n_bins must be >= 2")


def fit_boosted(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int = 100,
    max_depth: Optional[int] = None,
    learning_rate: float = 0.1,
    num_leaves: int = 31,
    min_child_samples: int = 20,
    min_gain_to_split: float = 0.0,
    n_bins: int = HIST_BINS,
    seed: int = 0,
) -> BoostedModel:
    """
    Fit a boosted ensemble.

    Args:
        max_depth: None (or -1) for unlimited depth
        min_gain_to_split: A split must reduce squared error by more than this
        seed: Recorded only; growth is deterministic

    Returns:
        BoostedModel with init = mean(y)
    """
    X, y = check_xy(X, y)
    if max_depth is not None and max_depth < 0:
        max_depth = None
    params = {
        "n_estimators": n_estimators,
        "max_depth": max_depth,
        "learning_rate": learning_rate,
        "num_leaves": num_leaves,
        "min_child_samples": min_child_samples,
        "min_gain_to_split": min_gain_to_split,
        "n_bins": n_bins,
        "seed": seed,
    }
    _check_params(params)

    binner = HistogramBinner.fit(X, n_bins)
    grower = _LeafwiseGrower(binner.transform(X), binner, params)

    init = float(y.mean())
    fitted = np.full(y.shape[0], init)
    trees = []
    for _ in range(n_estimators):
        tree = grower.grow(y - fitted)
        fitted = fitted + learning_rate * tree.predict(X)
        trees.append(tree)

    logger.debug(f"Boosted fit: {len(trees)} trees, {X.shape[0]} rows")
    return BoostedModel(init=init, trees=trees, learning_rate=learning_rate, params=params, n_bins=n_bins)
