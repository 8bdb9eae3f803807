"""
Single-layer LSTM regressor with a static-covariate initial state.
"""

from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from twsbench.features.assemble import N_CHANNELS, TREND_CHANNEL
from twsbench.models.neural.base import N_STATIC, SequenceModel
from twsbench.models.neural.init import init_weights
from twsbench.models.neural.layers import (
    dense,
    dense_grads,
    dropout_mask,
    lstm_sequence,
    lstm_sequence_backward,
)


class LSTMModel(SequenceModel):
    """
    h0 = tanh(static projection), c0 = 0; the head reads the last hidden
    state after dropout.

    Parameters: lstm.W_ih (4h, 16), lstm.W_hh (4h, h), lstm.b (4h),
    static.W (h, 11), static.b (h), head.W (H·Q, h), head.b (H·Q).
    """

    kind = "lstm"

    def __init__(
        self,
        hidden_size: int,
        horizon: int = 1,
        quantiles: Sequence[float] = (0.5,),
        dropout: float = 0.0,
        init: str = "xavier",
        seed: int = 0,
        time_mean: float = 0.0,
        time_std: float = 1.0,
    ):
        super().__init__(horizon, quantiles, dropout, time_mean, time_std)
        self.hidden_size = int(hidden_size)
        self.init = init
        self.params = init_weights(self.shapes(), init, seed, forget_bias=("lstm.b",))

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        h = self.hidden_size
        return {
            "lstm.W_ih": (4 * h, N_CHANNELS),
            "lstm.W_hh": (4 * h, h),
            "lstm.b": (4 * h,),
            "static.W": (h, N_STATIC),
            "static.b": (h,),
            "head.W": (self.n_outputs, h),
            "head.b": (self.n_outputs,),
        }

    def architecture(self) -> Dict[str, Any]:
        return {**super().architecture(), "hidden_size": self.hidden_size, "init": self.init}

    def _inputs(self, sequence: np.ndarray) -> np.ndarray:
        x = sequence.copy()
        x[:, :, TREND_CHANNEL : TREND_CHANNEL + 1] = self.scaled_time(sequence)
        return x

    def forward(
        self,
        sequence: np.ndarray,
        static: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        sequence, static = self.check_inputs(sequence, static)
        p = self.params
        B = sequence.shape[0]
        x = self._inputs(sequence)

        h0 = np.tanh(dense(static, p["static.W"], p["static.b"]))
        hs, lstm_tape = lstm_sequence(x, h0, np.zeros_like(h0), p["lstm.W_ih"], p["lstm.W_hh"], p["lstm.b"])
        last = hs[:, -1]
        mask = dropout_mask(last.shape, self.dropout, rng)
        dropped = last if mask is None else last * mask
        out = dense(dropped, p["head.W"], p["head.b"])

        tape = {"static": static, "h0": h0, "lstm": lstm_tape, "mask": mask, "dropped": dropped, "hidden": hs}
        return out.reshape(B, self.horizon, len(self.quantiles)), tape

    def hidden_states(self, sequence: np.ndarray, static: np.ndarray) -> np.ndarray:
        return self.forward(sequence, static)[1]["hidden"]

    def backward(self, tape: Dict[str, Any], d_predictions: np.ndarray) -> Dict[str, np.ndarray]:
        p = self.params
        hs = tape["hidden"]
        B, L, h = hs.shape
        d_out = d_predictions.reshape(B, self.n_outputs)

        grads = {}
        d_dropped, grads["head.W"], grads["head.b"] = dense_grads(tape["dropped"], p["head.W"], d_out)
        d_last = d_dropped if tape["mask"] is None else d_dropped * tape["mask"]

        dhs = np.zeros_like(hs)
        dhs[:, -1] = d_last
        back = lstm_sequence_backward(tape["lstm"], dhs, p["lstm.W_ih"], p["lstm.W_hh"])
        grads["lstm.W_ih"], grads["lstm.W_hh"], grads["lstm.b"] = back["dW_ih"], back["dW_hh"], back["db"]

        d_pre = back["dh0"] * (1.0 - tape["h0"] ** 2)
        _, grads["static.W"], grads["static.b"] = dense_grads(tape["static"], p["static.W"], d_pre)
        return grads
