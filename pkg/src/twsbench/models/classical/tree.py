"""
CART regression trees with greedy variance-reduction splits.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from twsbench.core.errors import EmptyInputError, InvalidParamsError, NonFiniteInputError


@dataclass
class TreeNode:
    """Leaf when feature is None; internal nodes send x[feature] <= threshold left."""

    value: float
    n: int
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        stack = [(self, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                out[idx] = node.value
                continue
            goes_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out

    def n_leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> Dict[str, Any]:
        if self.is_leaf:
            return {"value": self.value, "n": self.n}
        return {
            "value": self.value,
            "n": self.n,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TreeNode":
        if "feature" not in data:
            return cls(value=data["value"], n=data["n"])
        return cls(
            value=data["value"],
            n=data["n"],
            feature=data["feature"],
            threshold=data["threshold"],
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


def check_xy(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape[0] != X.shape[0]:
        raise EmptyInputError(f"need a nonempty design with matching targets, got {X.shape} / {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInputError("tree inputs contain NaN/inf")
    return X, y


def _leaf_value(y: np.ndarray) -> float:
    # summing in sorted order keeps leaf values independent of row order
    return float(np.mean(np.sort(y)))


def best_split(
    X: np.ndarray, y: np.ndarray, min_samples_leaf: int
) -> Optional[Tuple[int, float, float]]:
    """
    Exhaustive best split over all features.

    Returns:
        (feature, threshold, gain) with gain the reduction in squared error,
        or None when no admissible split improves it. Ties go to the lowest
        feature index, then the lowest threshold.
    """
    n, p = X.shape
    if n < 2:
        return None
    base = np.argsort(y, kind="stable")
    Xb, yb = X[base], y[base]
    yc = yb - yb.mean()

    order = np.argsort(Xb, axis=0, kind="stable")
    xs = np.take_along_axis(Xb, order, axis=0)
    ys = yc[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]

    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    left = csum[:-1]
    right = total - left
    gain = left**2 / n_left + right**2 / n_right - total**2 / n

    admissible = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    gain = np.where(admissible, gain, -np.inf)

    flat = gain.T.ravel()
    k = int(np.argmax(flat))
    if not np.isfinite(flat[k]) or flat[k] <= 0.0:
        return None
    feature, i = divmod(k, n - 1)
    lo, hi = xs[i, feature], xs[i + 1, feature]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return int(feature), float(threshold), float(flat[k])


def _check_params(max_depth, min_samples_split, min_samples_leaf) -> None:
    if max_depth is not None and max_depth < 0:
        raise InvalidParamsError(f"max_depth must be None or >= 0, got {max_depth}")
    if min_samples_split < 2:
        raise InvalidParamsError(f"min_samples_split must be >= 2, got {min_samples_split}")
    if min_samples_leaf < 1:
        raise InvalidParamsError(f"min_samples_leaf must be >= 1, got {min_samples_leaf}")


def _grow(X, y, depth, max_depth, min_samples_split, min_samples_leaf) -> TreeNode:
    n = y.shape[0]
    node = TreeNode(value=_leaf_value(y), n=n)
    if n < min_samples_split or (max_depth is not None and depth >= max_depth) or np.ptp(y) == 0:
        return node

    split = best_split(X, y, min_samples_leaf)
    if split is None:
        return node
    feature, threshold, _ = split
    goes_left = X[:, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(X[goes_left], y[goes_left], depth + 1, max_depth, min_samples_split, min_samples_leaf)
    node.right = _grow(X[~goes_left], y[~goes_left], depth + 1, max_depth, min_samples_split, min_samples_leaf)
    return node


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
) -> TreeNode:
    """
    Grow a regression tree.

    Args:
        X: (n, p) design
        y: (n,) targets
        max_depth: None for unlimited; 0 yields a single leaf
        min_samples_split: Smallest node that may be split
        min_samples_leaf: Smallest admissible child

    Returns:
        Root TreeNode
    """
    X, y = check_xy(X, y)
    _check_params(max_depth, min_samples_split, min_samples_leaf)
    return _grow(X, y, 0, max_depth, min_samples_split, min_samples_leaf)
