"""
Domain types for basin time series: time axis, basin series, split
protocol, scaler and synthetic-generator configuration.
"""

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from twsbench.core.errors import InvalidConfigError, SchemaError
from twsbench.utils.constants import (
    DAILY,
    DYNAMIC_CHANNELS,
    LINEAR_SPLIT,
    MONTHLY,
    NEURAL_SPLIT,
    RECORD_START,
    STATIC_FEATURES,
    STD_FLOOR,
    TARGET,
)


def _readonly(values, shape: Tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != shape:
        raise SchemaError(f"{what} has shape {arr.shape}, expected {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeAxis:
    """Gap-free axis of monthly (first of month) or daily steps."""

    start_date: date
    resolution: str
    length: int

    def __post_init__(self):
        if self.resolution not in (MONTHLY, DAILY):
            raise SchemaError(f"unknown resolution {self.resolution!r}")
        if self.length < 1:
            raise SchemaError("time axis needs at least one step")
        if self.resolution == MONTHLY and self.start_date.day != 1:
            raise SchemaError(f"monthly axis must start on day 1, got {self.start_date}")

    @property
    def is_monthly(self) -> bool:
        return self.resolution == MONTHLY

    def dates(self) -> pd.DatetimeIndex:
        freq = "MS" if self.is_monthly else "D"
        return pd.date_range(self.start_date, periods=self.length, freq=freq)

    def steps_between(self, start: date, end: date) -> int:
        """Signed number of steps from start to end at this resolution."""
        if self.is_monthly:
            return (end.year - start.year) * 12 + (end.month - start.month)
        return (end - start).days

    def step_of(self, when: date) -> int:
        return self.steps_between(self.start_date, when)

    def date_at(self, step: int) -> date:
        if self.is_monthly:
            months = self.start_date.month - 1 + step
            return date(self.start_date.year + months // 12, months % 12 + 1, 1)
        return self.start_date + timedelta(days=step)

    def end_bound(self) -> date:
        """Last calendar day covered by the final step."""
        if self.is_monthly:
            return self.date_at(self.length) - timedelta(days=1)
        return self.date_at(self.length - 1)

    def slice(self, start: int, stop: int) -> "TimeAxis":
        return TimeAxis(self.date_at(start), self.resolution, stop - start)


@dataclass(frozen=True)
class BasinSeries:
    """
    One basin's aligned record. Arrays are read-only copies, so a series is
    safe to share across threads and processes.
    """

    basin_id: str
    axis: TimeAxis
    dynamic: np.ndarray
    target: np.ndarray
    static: np.ndarray

    def __post_init__(self):
        n = self.axis.length
        object.__setattr__(
            self, "dynamic", _readonly(self.dynamic, (n, len(DYNAMIC_CHANNELS)), "dynamic block")
        )
        object.__setattr__(self, "target", _readonly(self.target, (n,), TARGET))
        object.__setattr__(
            self, "static", _readonly(self.static, (len(STATIC_FEATURES),), "static vector")
        )

    def __len__(self) -> int:
        return self.axis.length

    def view(self, start: int, stop: int) -> "BasinSeries":
        """Contiguous sub-series over steps [start, stop)."""
        return BasinSeries(
            basin_id=self.basin_id,
            axis=self.axis.slice(start, stop),
            dynamic=self.dynamic[start:stop],
            target=self.target[start:stop],
            static=self.static,
        )

    def channel(self, name: str) -> np.ndarray:
        if name == TARGET:
            return self.target
        return self.dynamic[:, DYNAMIC_CHANNELS.index(name)]

    def months(self) -> np.ndarray:
        return self.axis.dates().month.to_numpy()


DateRange = Tuple[date, date]


@dataclass(frozen=True)
class SplitSpec:
    """Inclusive, ordered, disjoint date ranges; validation is optional."""

    train: DateRange
    test: DateRange
    validation: Optional[DateRange] = None

    def __post_init__(self):
        ranges = self.ranges()
        for name, (start, end) in ranges:
            if start > end:
                raise InvalidConfigError(f"split {name} starts after it ends: {start} > {end}")
        for (first, (_, end)), (second, (start, _)) in zip(ranges, ranges[1:]):
            if not end < start:
                raise InvalidConfigError(f"split {first} must end before {second} starts")

    def ranges(self) -> List[Tuple[str, DateRange]]:
        out = [("train", self.train)]
        if self.validation is not None:
            out.append(("validation", self.validation))
        out.append(("test", self.test))
        return out

    @classmethod
    def linear(cls) -> "SplitSpec":
        """2003-2015 train, 2016-2020 test."""
        return cls(train=LINEAR_SPLIT["train"], test=LINEAR_SPLIT["test"])

    @classmethod
    def neural(cls) -> "SplitSpec":
        """2003-2012 train, 2013-2015 validation, 2016-2020 test."""
        return cls(
            train=NEURAL_SPLIT["train"],
            validation=NEURAL_SPLIT["validation"],
            test=NEURAL_SPLIT["test"],
        )

    def to_dict(self) -> Dict[str, List[str]]:
        return {name: [s.isoformat(), e.isoformat()] for name, (s, e) in self.ranges()}


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization; std is floored so constants map to zero."""

    names: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    std_floor: float = STD_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(self.mean, (len(self.names),), "scaler mean"))
        std = np.maximum(np.asarray(self.std, dtype=np.float64), self.std_floor)
        object.__setattr__(self, "std", _readonly(std, (len(self.names),), "scaler std"))

    @classmethod
    def fit(cls, names, values: np.ndarray, std_floor: float = STD_FLOOR) -> "Scaler":
        values = np.asarray(values, dtype=np.float64)
        return cls(tuple(names), values.mean(axis=0), values.std(axis=0), std_floor)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean

    def index(self, name: str) -> int:
        return self.names.index(name)

    def transform_column(self, name: str, values: np.ndarray) -> np.ndarray:
        i = self.index(name)
        return (np.asarray(values, dtype=np.float64) - self.mean[i]) / self.std[i]

    def inverse_column(self, name: str, values: np.ndarray) -> np.ndarray:
        i = self.index(name)
        return np.asarray(values, dtype=np.float64) * self.std[i] + self.mean[i]

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {
            name: {"mean": float(m), "std": float(s)}
            for name, m, s in zip(self.names, self.mean, self.std)
        }


class SyntheticConfig(BaseModel):
    """
    Knobs of the synthetic basin generator.

    target = seasonal cycle (optionally drifting) + trend * t
             + sum_c w_c * anomaly_c(t - mixing_lag) + AR(1) noise
    """

    model_config = ConfigDict(extra="forbid")

    n_basins: int = 32
    start_date: date = RECORD_START
    resolution: Literal["monthly", "daily"] = "monthly"
    length: int = 216

    channel_mean: Dict[str, float] = {
        "precip": 80.0,
        "temp": 285.0,
        "lai": 2.5,
        "ssmc": 0.25,
    }
    seasonal_amplitude: Dict[str, float] = {
        "precip": 40.0,
        "temp": 10.0,
        "lai": 1.5,
        "ssmc": 0.08,
    }
    channel_noise: Dict[str, float] = {
        "precip": 15.0,
        "temp": 1.5,
        "lai": 0.3,
        "ssmc": 0.02,
    }
    target_seasonal_amplitude: float = 30.0

    ar_coefficient: float = 0.6
    noise_scale: float = 3.0

    # mm per month; applied to the trending share of basins
    trend_slope: float = 0.0
    trend_fraction: float = 1.0
    # fractional growth of the target's seasonal amplitude per year
    seasonality_drift: float = 0.0

    mixing_weights: Dict[str, float] = {
        "precip": 0.8,
        "temp": -2.0,
        "lai": 6.0,
        "ssmc": 150.0,
    }
    mixing_lag: int = 1
    mixing_spread: float = 0.0
    two_regime: bool = False
    nonlinearity: Literal["none", "threshold"] = "none"

    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SyntheticConfig":
        if self.n_basins < 1:
            raise InvalidConfigError(f"n_basins must be >= 1, got {self.n_basins}")
        if self.length < 1:
            raise InvalidConfigError(f"length must be >= 1, got {self.length}")
        if not 0.0 <= self.ar_coefficient < 1.0:
            raise InvalidConfigError(f"ar_coefficient must lie in [0, 1), got {self.ar_coefficient}")
        if self.noise_scale < 0:
            raise InvalidConfigError("noise_scale must be non-negative")
        if not 0.0 <= self.trend_fraction <= 1.0:
            raise InvalidConfigError("trend_fraction must lie in [0, 1]")
        if self.mixing_lag < 1:
            raise InvalidConfigError("mixing_lag must be >= 1 (inputs strictly precede the target)")
        if self.resolution == MONTHLY and self.start_date.day != 1:
            raise InvalidConfigError("monthly start_date must be the first of a month")
        for name in ("channel_mean", "seasonal_amplitude", "channel_noise", "mixing_weights"):
            keys = set(getattr(self, name))
            if keys != set(DYNAMIC_CHANNELS):
                raise InvalidConfigError(f"{name} must define exactly {list(DYNAMIC_CHANNELS)}")
        return self

    def axis(self) -> TimeAxis:
        return TimeAxis(self.start_date, self.resolution, self.length)

    @classmethod
    def ol_like(cls, **overrides) -> "SyntheticConfig":
        """Stationary regime: no trend, no seasonal drift."""
        params = {"trend_slope": 0.0, "seasonality_drift": 0.0}
        params.update(overrides)
        return cls(**params)

    @classmethod
    def da_like(cls, **overrides) -> "SyntheticConfig":
        """Nonstationary regime: depletion trend in half the basins, drifting seasonality."""
        params = {"trend_slope": -2.0, "trend_fraction": 0.5, "seasonality_drift": 0.02}
        params.update(overrides)
        return cls(**params)
