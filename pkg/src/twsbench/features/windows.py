"""
Window-level feature builders: lag windows, month dummies, trend index and
target smoothing.
"""

from datetime import date
from typing import List, Union

import numpy as np

from twsbench.core.errors import InsufficientHistoryError, InvalidTaskError, WindowTooLargeError
from twsbench.dataset.types import BasinSeries
from twsbench.utils.constants import DYNAMIC_CHANNELS, MONTHLY

N_DUMMIES = 11


def build_lag_window(series: Union[BasinSeries, np.ndarray], t: int, seq_len: int) -> np.ndarray:
    """
    Lagged dynamic inputs for the target at step t.

    Args:
        series: BasinSeries or a (T, 4) dynamic block
        t: Target step; the window is steps t-L .. t-1
        seq_len: Window length L

    Returns:
        4L vector, channel-major, oldest lag first within each channel
    """
    dynamic = series.dynamic if isinstance(series, BasinSeries) else np.asarray(series)
    if seq_len < 1:
        raise InvalidTaskError(f"sequence length must be >= 1, got {seq_len}")
    if t < seq_len:
        raise InsufficientHistoryError(f"target step {t} has fewer than {seq_len} steps of history")
    if t > dynamic.shape[0]:
        raise InsufficientHistoryError(f"target step {t} lies beyond the series end ({dynamic.shape[0]})")
    return dynamic[t - seq_len : t].T.reshape(-1)


def lag_feature_names(seq_len: int) -> List[str]:
    return [f"{channel}_lag{lag}" for channel in DYNAMIC_CHANNELS for lag in range(seq_len, 0, -1)]


def month_dummies(month: int) -> np.ndarray:
    """One-hot over February..December; January is the all-zero reference."""
    if not 1 <= int(month) <= 12:
        raise InvalidTaskError(f"month must be 1..12, got {month}")
    out = np.zeros(N_DUMMIES)
    if month > 1:
        out[month - 2] = 1.0
    return out


def month_dummy_matrix(months: np.ndarray) -> np.ndarray:
    """Row-wise month_dummies for an array of months."""
    months = np.asarray(months, dtype=int)
    out = np.zeros((months.shape[0], N_DUMMIES))
    rows = np.flatnonzero(months > 1)
    out[rows, months[rows] - 2] = 1.0
    return out


def dummy_feature_names() -> List[str]:
    return [f"month_{m:02d}" for m in range(2, 13)]


def trend_index(when: date, epoch: date, resolution: str = MONTHLY) -> int:
    """Steps elapsed since the global epoch (first pooled training timestamp)."""
    if resolution == MONTHLY:
        return (when.year - epoch.year) * 12 + (when.month - epoch.month)
    return (when - epoch).days


def smooth_target(target: np.ndarray, window: int) -> np.ndarray:
    """
    Trailing moving average: out[t] = mean(target[t-k+1 .. t]).

    Steps without a full window are NaN (not emitted).
    """
    target = np.asarray(target, dtype=np.float64)
    if window < 1:
        raise InvalidTaskError(f"smoothing window must be >= 1, got {window}")
    if window > target.shape[0]:
        raise WindowTooLargeError(f"smoothing window {window} exceeds series length {target.shape[0]}")
    out = np.full(target.shape[0], np.nan)
    out[window - 1 :] = np.lib.stride_tricks.sliding_window_view(target, window).mean(axis=1)
    return out
