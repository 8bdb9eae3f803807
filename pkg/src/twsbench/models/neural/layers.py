"""
Forward/backward primitives shared by the sequence models.

Dense weights are stored (out, in) and applied as x @ W.T + b. Every
forward returns the values its backward needs; nothing is cached on
module state.
"""

from typing import Dict, Optional, Tuple

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def dense(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ W.T + b


def dense_grads(x: np.ndarray, W: np.ndarray, dy: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(dx, dW, db) for y = x @ W.T + b; leading axes of x are flattened."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ W, dy2.T @ x2, dy2.sum(axis=0)


def dropout_mask(shape, rate: float, rng: Optional[np.random.Generator]) -> Optional[np.ndarray]:
    """Inverted-dropout mask, or None outside training."""
    if rng is None or rate <= 0.0:
        return None
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def lstm_sequence(
    x: np.ndarray,
    h0: np.ndarray,
    c0: np.ndarray,
    W_ih: np.ndarray,
    W_hh: np.ndarray,
    b: np.ndarray,
) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """
    Run a single-layer LSTM over x (B, L, in).

    Gate blocks of the 4h pre-activation are ordered input, forget, cell, output.

    Returns:
        Hidden states (B, L, h) and the tape for lstm_sequence_backward
    """
    B, L, _ = x.shape
    h = h0.shape[1]
    hs = np.empty((B, L, h))
    cs = np.empty((B, L, h))
    gates = np.empty((B, L, 4 * h))
    h_prev, c_prev = h0, c0
    for t in range(L):
        z = x[:, t] @ W_ih.T + h_prev @ W_hh.T + b
        i = sigmoid(z[:, :h])
        f = sigmoid(z[:, h : 2 * h])
        g = np.tanh(z[:, 2 * h : 3 * h])
        o = sigmoid(z[:, 3 * h :])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        gates[:, t] = np.concatenate([i, f, g, o], axis=1)
        cs[:, t] = c_prev
        hs[:, t] = h_prev
    tape = {"x": x, "h0": h0, "c0": c0, "hs": hs, "cs": cs, "gates": gates}
    return hs, tape


def lstm_sequence_backward(
    tape: Dict[str, np.ndarray],
    dhs: np.ndarray,
    W_ih: np.ndarray,
    W_hh: np.ndarray,
) -> Dict[str, np.ndarray]:
    """
    Backpropagate through time.

    Args:
        tape: From lstm_sequence
        dhs: Loss gradient w.r.t. every hidden state (B, L, h)

    Returns:
        dx, dh0, dc0, dW_ih, dW_hh, db
    """
    x, hs, cs, gates = tape["x"], tape["hs"], tape["cs"], tape["gates"]
    B, L, h = hs.shape
    dx = np.zeros_like(x)
    dW_ih = np.zeros_like(W_ih)
    dW_hh = np.zeros_like(W_hh)
    db = np.zeros(4 * h)
    dh_next = np.zeros((B, h))
    dc_next = np.zeros((B, h))
    for t in reversed(range(L)):
        i, f, g, o = (gates[:, t, k * h : (k + 1) * h] for k in range(4))
        c = cs[:, t]
        c_prev = cs[:, t - 1] if t > 0 else tape["c0"]
        h_prev = hs[:, t - 1] if t > 0 else tape["h0"]

        dh = dhs[:, t] + dh_next
        tc = np.tanh(c)
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc**2)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g**2),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dW_ih += dz.T @ x[:, t]
        dW_hh += dz.T @ h_prev
        db += dz.sum(axis=0)
        dx[:, t] = dz @ W_ih
        dh_next = dz @ W_hh
        dc_next = dc * f
    return {"dx": dx, "dh0": dh_next, "dc0": dc_next, "dW_ih": dW_ih, "dW_hh": dW_hh, "db": db}
