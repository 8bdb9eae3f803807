"""
Pinball (quantile) loss and its gradient.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from twsbench.core.errors import InvalidParamsError, NonFiniteInputError


class QuantileSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: List[float] = [0.5]

    @model_validator(mode="after")
    def _check(self) -> "QuantileSpec":
        if not self.q:
            raise InvalidParamsError("at least one quantile level is required")
        if any(not 0.0 < level < 1.0 for level in self.q):
            raise InvalidParamsError(f"quantile levels must lie in (0, 1), got {self.q}")
        if list(self.q) != sorted(set(self.q)):
            raise InvalidParamsError(f"quantile levels must be sorted and distinct, got {self.q}")
        return self

    def point_index(self) -> int:
        """Index of the level used for point predictions (0.5, else the nearest)."""
        return int(np.argmin(np.abs(np.asarray(self.q) - 0.5)))


def pinball(y: np.ndarray, y_hat: np.ndarray, q: float) -> np.ndarray:
    """Elementwise max(q·(y−ŷ), (q−1)·(y−ŷ))."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if not (np.isfinite(y).all() and np.isfinite(y_hat).all()):
        raise NonFiniteInputError("pinball loss inputs contain NaN/inf")
    diff = y - y_hat
    return np.maximum(q * diff, (q - 1.0) * diff)


def quantile_loss(y, y_hat, q: float) -> float:
    """Mean pinball loss at level q."""
    return float(np.mean(pinball(y, y_hat, q)))


def median_loss(y, y_hat) -> float:
    """Twice the q=0.5 pinball mean, which is exactly the MAE."""
    return 2.0 * quantile_loss(y, y_hat, 0.5)


def pinball_loss_and_grad(
    targets: np.ndarray,
    predictions: np.ndarray,
    quantiles: Sequence[float],
    active: Optional[Sequence[bool]] = None,
) -> Tuple[float, np.ndarray]:
    """
    Mean pinball loss over examples, horizons and active quantile levels.

    Args:
        targets: (B, H)
        predictions: (B, H, Q)
        quantiles: The Q levels of the prediction head
        active: Levels that enter the loss; inactive outputs get zero gradient

    Returns:
        (loss, d loss / d predictions)
    """
    targets = np.asarray(targets, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    if not (np.isfinite(targets).all() and np.isfinite(predictions).all()):
        raise NonFiniteInputError("loss inputs contain NaN/inf")
    q = np.asarray(quantiles, dtype=np.float64)
    mask = np.ones(q.size, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    if not mask.any():
        raise InvalidParamsError("no active quantile level")

    diff = targets[:, :, None] - predictions
    losses = np.maximum(q * diff, (q - 1.0) * diff)
    count = diff.shape[0] * diff.shape[1] * int(mask.sum())
    loss = float(losses[:, :, mask].sum() / count)
    grad = np.where(diff > 0, -q, 1.0 - q) * mask / count
    return loss, grad
