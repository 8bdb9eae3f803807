"""
TFT-lite: a reduced temporal-fusion model.

embed -> (+ time-index embedding) -> LSTM encoder seeded with the static
context -> multi-head attention from the last step over all steps ->
gated residual with static context -> dropout -> feed-forward -> quantile head.
"""

from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from twsbench.core.errors import InvalidParamsError
from twsbench.features.assemble import TREND_CHANNEL
from twsbench.models.neural.base import N_STATIC, SequenceModel
from twsbench.models.neural.init import init_weights
from twsbench.models.neural.layers import (
    dense,
    dense_grads,
    dropout_mask,
    elu,
    elu_grad,
    lstm_sequence,
    lstm_sequence_backward,
    sigmoid,
    softmax,
)

N_OBSERVED = TREND_CHANNEL


class TFTLiteModel(SequenceModel):
    kind = "tft"

    def __init__(
        self,
        hidden_size: int,
        nheads: int,
        horizon: int = 1,
        quantiles: Sequence[float] = (0.5,),
        dropout: float = 0.0,
        init: str = "xavier",
        seed: int = 0,
        time_mean: float = 0.0,
        time_std: float = 1.0,
        use_time_index: bool = True,
    ):
        super().__init__(horizon, quantiles, dropout, time_mean, time_std)
        if nheads < 1 or hidden_size % nheads != 0:
            raise InvalidParamsError(f"hidden_size {hidden_size} is not divisible by nheads {nheads}")
        self.hidden_size = int(hidden_size)
        self.nheads = int(nheads)
        self.use_time_index = bool(use_time_index)
        self.init = init
        self.params = init_weights(self.shapes(), init, seed, forget_bias=("encoder.b",))

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.nheads

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        d = self.hidden_size
        shapes = {
            "embed.W": (d, N_OBSERVED),
            "embed.b": (d,),
            "time.W": (d, 1),
            "time.b": (d,),
            "context.W": (d, N_STATIC),
            "context.b": (d,),
            "encoder.W_ih": (4 * d, d),
            "encoder.W_hh": (4 * d, d),
            "encoder.b": (4 * d,),
            "grn.W_1": (d, d),
            "grn.W_c": (d, d),
            "grn.b_1": (d,),
            "grn.W_2": (d, d),
            "grn.b_2": (d,),
            "grn.W_g": (d, d),
            "grn.b_g": (d,),
            "ff.W_1": (d, d),
            "ff.b_1": (d,),
            "ff.W_2": (d, d),
            "ff.b_2": (d,),
            "head.W": (self.n_outputs, d),
            "head.b": (self.n_outputs,),
        }
        for name in ("q", "k", "v", "o"):
            shapes[f"attn.W_{name}"] = (d, d)
            shapes[f"attn.b_{name}"] = (d,)
        return shapes

    def architecture(self) -> Dict[str, Any]:
        return {
            **super().architecture(),
            "hidden_size": self.hidden_size,
            "nheads": self.nheads,
            "use_time_index": self.use_time_index,
            "init": self.init,
        }

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        """(B, L, d) -> (B, n, L, d/n)."""
        B, L, _ = x.shape
        return x.reshape(B, L, self.nheads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge_heads(self, x: np.ndarray) -> np.ndarray:
        B, _, L, _ = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, L, self.hidden_size)

    def forward(
        self,
        sequence: np.ndarray,
        static: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        sequence, static = self.check_inputs(sequence, static)
        p = self.params
        B, L, _ = sequence.shape
        d, n, dh = self.hidden_size, self.nheads, self.head_dim

        observed = sequence[:, :, :N_OBSERVED]
        embedded = dense(observed, p["embed.W"], p["embed.b"])
        time = None
        if self.use_time_index:
            time = self.scaled_time(sequence)
            embedded = embedded + dense(time, p["time.W"], p["time.b"])

        context = np.tanh(dense(static, p["context.W"], p["context.b"]))
        hs, lstm_tape = lstm_sequence(
            embedded, context, np.zeros_like(context), p["encoder.W_ih"], p["encoder.W_hh"], p["encoder.b"]
        )
        last = hs[:, -1]

        q = dense(last, p["attn.W_q"], p["attn.b_q"]).reshape(B, n, dh)
        K = self._split_heads(dense(hs, p["attn.W_k"], p["attn.b_k"]))
        V = self._split_heads(dense(hs, p["attn.W_v"], p["attn.b_v"]))
        scores = np.einsum("bnd,bnld->bnl", q, K) / np.sqrt(dh)
        alpha = softmax(scores, axis=-1)
        heads = np.einsum("bnl,bnld->bnd", alpha, V).reshape(B, d)
        attended = dense(heads, p["attn.W_o"], p["attn.b_o"])

        a = last + attended
        pre = a @ p["grn.W_1"].T + context @ p["grn.W_c"].T + p["grn.b_1"]
        eta = elu(pre)
        u = dense(eta, p["grn.W_2"], p["grn.b_2"])
        gate = sigmoid(dense(eta, p["grn.W_g"], p["grn.b_g"]))
        z = a + gate * u

        mask = dropout_mask(z.shape, self.dropout, rng)
        zd = z if mask is None else z * mask
        ff_pre = dense(zd, p["ff.W_1"], p["ff.b_1"])
        ff_act = elu(ff_pre)
        f = zd + dense(ff_act, p["ff.W_2"], p["ff.b_2"])
        out = dense(f, p["head.W"], p["head.b"])

        tape = {
            "observed": observed,
            "time": time,
            "static": static,
            "context": context,
            "lstm": lstm_tape,
            "hidden": hs,
            "q": q,
            "K": K,
            "V": V,
            "alpha": alpha,
            "heads": heads,
            "a": a,
            "pre": pre,
            "eta": eta,
            "u": u,
            "gate": gate,
            "mask": mask,
            "zd": zd,
            "ff_pre": ff_pre,
            "ff_act": ff_act,
            "f": f,
            "attention": alpha.mean(axis=1),
        }
        return out.reshape(B, self.horizon, len(self.quantiles)), tape

    def attention(self, sequence: np.ndarray, static: np.ndarray, batch_size: int = 1024) -> np.ndarray:
        """Head-mean attention of the last step over the L input steps, (B, L)."""
        parts = [
            self.forward(sequence[start : start + batch_size], static[start : start + batch_size])[1]["attention"]
            for start in range(0, len(sequence), batch_size)
        ]
        return np.concatenate(parts, axis=0) if parts else np.zeros((0, np.shape(sequence)[1]))

    def backward(self, tape: Dict[str, Any], d_predictions: np.ndarray) -> Dict[str, np.ndarray]:
        p = self.params
        hs = tape["hidden"]
        B, L, d = hs.shape
        n, dh = self.nheads, self.head_dim
        grads: Dict[str, np.ndarray] = {}
        d_out = d_predictions.reshape(B, self.n_outputs)

        d_f, grads["head.W"], grads["head.b"] = dense_grads(tape["f"], p["head.W"], d_out)

        d_act, grads["ff.W_2"], grads["ff.b_2"] = dense_grads(tape["ff_act"], p["ff.W_2"], d_f)
        d_ff_pre = d_act * elu_grad(tape["ff_pre"])
        d_zd, grads["ff.W_1"], grads["ff.b_1"] = dense_grads(tape["zd"], p["ff.W_1"], d_ff_pre)
        d_zd = d_zd + d_f
        d_z = d_zd if tape["mask"] is None else d_zd * tape["mask"]

        gate, u, eta = tape["gate"], tape["u"], tape["eta"]
        d_a = d_z.copy()
        d_gate_pre = d_z * u * gate * (1.0 - gate)
        d_eta, grads["grn.W_g"], grads["grn.b_g"] = dense_grads(eta, p["grn.W_g"], d_gate_pre)
        d_eta_u, grads["grn.W_2"], grads["grn.b_2"] = dense_grads(eta, p["grn.W_2"], d_z * gate)
        d_pre = (d_eta + d_eta_u) * elu_grad(tape["pre"])
        grads["grn.W_1"] = d_pre.T @ tape["a"]
        grads["grn.W_c"] = d_pre.T @ tape["context"]
        grads["grn.b_1"] = d_pre.sum(axis=0)
        d_a += d_pre @ p["grn.W_1"]
        d_context = d_pre @ p["grn.W_c"]

        d_last = d_a.copy()
        d_heads, grads["attn.W_o"], grads["attn.b_o"] = dense_grads(tape["heads"], p["attn.W_o"], d_a)
        d_heads = d_heads.reshape(B, n, dh)
        alpha, q, K, V = tape["alpha"], tape["q"], tape["K"], tape["V"]
        d_alpha = np.einsum("bnd,bnld->bnl", d_heads, V)
        d_V = np.einsum("bnl,bnd->bnld", alpha, d_heads)
        d_scores = alpha * (d_alpha - (alpha * d_alpha).sum(axis=-1, keepdims=True))
        d_q = np.einsum("bnl,bnld->bnd", d_scores, K).reshape(B, d) / np.sqrt(dh)
        d_K = np.einsum("bnl,bnd->bnld", d_scores, q) / np.sqrt(dh)

        d_hs_k, grads["attn.W_k"], grads["attn.b_k"] = dense_grads(hs, p["attn.W_k"], self._merge_heads(d_K))
        d_hs_v, grads["attn.W_v"], grads["attn.b_v"] = dense_grads(hs, p["attn.W_v"], self._merge_heads(d_V))
        d_last_q, grads["attn.W_q"], grads["attn.b_q"] = dense_grads(hs[:, -1], p["attn.W_q"], d_q)

        d_hs = d_hs_k + d_hs_v
        d_hs[:, -1] += d_last + d_last_q
        back = lstm_sequence_backward(tape["lstm"], d_hs, p["encoder.W_ih"], p["encoder.W_hh"])
        grads["encoder.W_ih"], grads["encoder.W_hh"], grads["encoder.b"] = back["dW_ih"], back["dW_hh"], back["db"]

        d_context = d_context + back["dh0"]
        d_context_pre = d_context * (1.0 - tape["context"] ** 2)
        _, grads["context.W"], grads["context.b"] = dense_grads(tape["static"], p["context.W"], d_context_pre)

        d_embedded = back["dx"]
        if tape["time"] is not None:
            _, grads["time.W"], grads["time.b"] = dense_grads(tape["time"], p["time.W"], d_embedded)
        else:
            grads["time.W"] = np.zeros_like(p["time.W"])
            grads["time.b"] = np.zeros_like(p["time.b"])
        _, grads["embed.W"], grads["embed.b"] = dense_grads(tape["observed"], p["embed.W"], d_embedded)
        return grads
