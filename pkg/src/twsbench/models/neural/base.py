"""
Common plumbing for the sequence models: parameter bookkeeping, input
checks, trend-channel scaling and batched inference.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from twsbench.core.errors import ShapeMismatchError
from twsbench.features.assemble import N_CHANNELS, TREND_CHANNEL
from twsbench.models.neural.loss import QuantileSpec, pinball_loss_and_grad
from twsbench.utils.constants import STATIC_FEATURES, STD_FLOOR

N_STATIC = len(STATIC_FEATURES)


class SequenceModel:
    """
    Base for models mapping (sequence (B, L, 16), static (B, 11)) to
    quantile predictions (B, H, Q).

    The trend channel arrives as a raw step count and is standardized with
    the training-split statistics held on the model.
    """

    kind: str = ""

    def __init__(
        self,
        horizon: int = 1,
        quantiles: Sequence[float] = (0.5,),
        dropout: float = 0.0,
        time_mean: float = 0.0,
        time_std: float = 1.0,
    ):
        self.horizon = int(horizon)
        self.quantiles = list(QuantileSpec(q=list(quantiles)).q)
        self.dropout = float(dropout)
        self.time_mean = float(time_mean)
        self.time_std = max(float(time_std), STD_FLOOR)
        self.params: Dict[str, np.ndarray] = {}
        self.trained = False

    @property
    def n_outputs(self) -> int:
        return self.horizon * len(self.quantiles)

    def parameter_names(self) -> List[str]:
        return sorted(self.params)

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy_params(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def architecture(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "quantiles": list(self.quantiles),
            "dropout": self.dropout,
            "time_mean": self.time_mean,
            "time_std": self.time_std,
        }

    def check_inputs(self, sequence: np.ndarray, static: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        sequence = np.asarray(sequence, dtype=np.float64)
        static = np.asarray(static, dtype=np.float64)
        if sequence.ndim != 3 or sequence.shape[2] != N_CHANNELS:
            raise ShapeMismatchError(f"sequence must be (B, L, {N_CHANNELS}), got {sequence.shape}")
        if sequence.shape[1] < 1:
            raise ShapeMismatchError("sequence needs at least one step")
        if static.shape != (sequence.shape[0], N_STATIC):
            raise ShapeMismatchError(f"static must be ({sequence.shape[0]}, {N_STATIC}), got {static.shape}")
        return sequence, static

    def scaled_time(self, sequence: np.ndarray) -> np.ndarray:
        """Standardized trend channel, (B, L, 1)."""
        return (sequence[:, :, TREND_CHANNEL : TREND_CHANNEL + 1] - self.time_mean) / self.time_std

    def forward(
        self,
        sequence: np.ndarray,
        static: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        """Predictions (B, H, Q) and the tape for backward; rng enables dropout."""
        raise NotImplementedError

    def backward(self, tape: Dict[str, Any], d_predictions: np.ndarray) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    def loss_and_grads(
        self,
        sequence: np.ndarray,
        static: np.ndarray,
        targets: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        active: Optional[Sequence[bool]] = None,
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        predictions, tape = self.forward(sequence, static, rng=rng)
        loss, d_pred = pinball_loss_and_grad(targets, predictions, self.quantiles, active)
        return loss, self.backward(tape, d_pred)

    def loss(self, sequence: np.ndarray, static: np.ndarray, targets: np.ndarray, batch_size: int = 1024) -> float:
        """Inference-mode mean pinball loss, accumulated batch by batch."""
        total, count = 0.0, 0
        for start in range(0, len(sequence), batch_size):
            stop = start + batch_size
            predictions, _ = self.forward(sequence[start:stop], static[start:stop])
            loss, _ = pinball_loss_and_grad(targets[start:stop], predictions, self.quantiles)
            n = predictions.shape[0]
            total += loss * n
            count += n
        return total / max(count, 1)

    def predict_quantiles(self, sequence: np.ndarray, static: np.ndarray, batch_size: int = 1024) -> np.ndarray:
        parts = [
            self.forward(sequence[start : start + batch_size], static[start : start + batch_size])[0]
            for start in range(0, len(sequence), batch_size)
        ]
        if not parts:
            return np.zeros((0, self.horizon, len(self.quantiles)))
        return np.concatenate(parts, axis=0)

    def predict(self, sequence: np.ndarray, static: np.ndarray, batch_size: int = 1024) -> np.ndarray:
        """Point predictions (B, H) at the median level."""
        index = QuantileSpec(q=self.quantiles).point_index()
        return self.predict_quantiles(sequence, static, batch_size)[:, :, index]

    def predict_split(self, split) -> np.ndarray:
        """Point predictions for every example of a SupervisedSplit, scaled target space."""
        return self.predict(split.sequence, split.static)
