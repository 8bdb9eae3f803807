"""
Seeded weight initialization.
"""

from typing import Dict, Tuple

import numpy as np
from scipy.linalg import qr

from twsbench.core.errors import UnknownSchemeError

SCHEMES = ("xavier", "orthogonal")


def xavier_uniform(shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    fan_out, fan_in = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def orthogonal(shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Orthonormal columns when rows >= cols, orthonormal rows otherwise."""
    rows, cols = shape
    A = rng.standard_normal((max(rows, cols), min(rows, cols)))
    Q, R = qr(A, mode="economic")
    Q = Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
    return Q if rows >= cols else Q.T


_INITIALIZERS = {"xavier": xavier_uniform, "orthogonal": orthogonal}


def init_weights(
    shapes: Dict[str, Tuple[int, ...]],
    scheme: str,
    seed: int,
    forget_bias: Tuple[str, ...] = (),
) -> Dict[str, np.ndarray]:
    """
    Draw every parameter in name order from one seeded generator.

    Args:
        shapes: Canonical parameter name -> shape; 2-D entries are weights
        scheme: "xavier" or "orthogonal"
        seed: Generator seed
        forget_bias: LSTM bias vectors whose forget block starts at 1

    Returns:
        Parameter name -> float64 array; biases are 0
    """
    if scheme not in _INITIALIZERS:
        raise UnknownSchemeError(f"unknown init scheme {scheme!r}; expected one of {SCHEMES}")
    draw = _INITIALIZERS[scheme]
    rng = np.random.default_rng(seed)
    params = {}
    for name in sorted(shapes):
        shape = tuple(shapes[name])
        if len(shape) == 2:
            params[name] = draw(shape, rng).astype(np.float64)
        else:
            params[name] = np.zeros(shape, dtype=np.float64)
    for name in forget_bias:
        h = params[name].shape[0] // 4
        params[name][h : 2 * h] = 1.0
    return params
