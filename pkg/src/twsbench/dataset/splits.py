"""
Chronological splits and training-only standardization.
"""

from typing import Dict, Sequence, Tuple

import numpy as np
from loguru import logger

from twsbench.core.errors import DegenerateError, EmptySplitError, OutOfRangeError
from twsbench.dataset.types import BasinSeries, Scaler, SplitSpec
from twsbench.utils.constants import DYNAMIC_CHANNELS, STATIC_FEATURES, STD_FLOOR, TARGET


def split_series(series: BasinSeries, spec: SplitSpec) -> Dict[str, BasinSeries]:
    """
    Cut a series into contiguous per-split views.

    Args:
        series: Full basin record
        spec: Inclusive date ranges

    Returns:
        Ordered dict split name -> view ("train", optional "validation", "test")
    """
    axis = series.axis
    dates = axis.dates()
    views: Dict[str, BasinSeries] = {}

    for name, (start, end) in spec.ranges():
        if start < axis.start_date or end > axis.end_bound():
            raise OutOfRangeError(
                f"split {name} [{start}, {end}] lies outside the record "
                f"[{axis.start_date}, {axis.end_bound()}]",
                basin_id=series.basin_id,
            )
        lo = int(np.searchsorted(dates.date, start, side="left"))
        hi = int(np.searchsorted(dates.date, end, side="right"))
        if hi <= lo:
            raise EmptySplitError(f"split {name} [{start}, {end}] contains no steps", basin_id=series.basin_id)
        views[name] = series.view(lo, hi)

    return views


def fit_scaler(train_view: BasinSeries, std_floor: float = STD_FLOOR) -> Scaler:
    """
    Standardization parameters for the dynamic channels and the target,
    computed from the training view only (population std, floored).
    """
    if len(train_view) < 2:
        raise DegenerateError(
            f"scaler needs at least 2 training steps, got {len(train_view)}", basin_id=train_view.basin_id
        )
    values = np.column_stack([train_view.dynamic, train_view.target])
    return Scaler.fit(DYNAMIC_CHANNELS + (TARGET,), values, std_floor)


def fit_static_scaler(series: Sequence[BasinSeries], std_floor: float = STD_FLOOR) -> Scaler:
    """Across-basin standardization of the 11 static features."""
    if not series:
        raise DegenerateError("static scaler needs at least one basin")
    values = np.stack([s.static for s in series])
    if len(series) == 1:
        logger.warning("static scaler fit on a single basin; statics scale to zero")
    return Scaler.fit(STATIC_FEATURES, values, std_floor)


def scale_series(series: BasinSeries, scaler: Scaler) -> Tuple[np.ndarray, np.ndarray]:
    """Scaled (dynamic, target) arrays of a series or view."""
    scaled = scaler.transform(np.column_stack([series.dynamic, series.target]))
    return scaled[:, : len(DYNAMIC_CHANNELS)], scaled[:, len(DYNAMIC_CHANNELS)]
