"""
Supervised-set assembly.

Turns basin series into windowed examples for one task. Every example
carries both representations: a per-step sequence tensor (neural path) and
the flat lag vector (linear / tree path), derived from the same numbers.
"""

from dataclasses import dataclass, field, replace
from datetime import date
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, model_validator

from twsbench.core.errors import (
    InsufficientHistoryError,
    InvalidTaskError,
    ResolutionMismatchError,
    SplitLeakageError,
)
from twsbench.core.manifest import calculate_checksum
from twsbench.dataset.splits import fit_scaler, fit_static_scaler, scale_series, split_series
from twsbench.dataset.types import BasinSeries, Scaler, SplitSpec
from twsbench.features.windows import (
    dummy_feature_names,
    lag_feature_names,
    month_dummy_matrix,
    smooth_target,
)
from twsbench.utils.constants import (
    CLIMATOLOGY_SOURCES,
    DAILY,
    DAILY_SEQ_LEN,
    DAILY_STRIDE,
    DEFAULT_SEQ_LEN,
    DYNAMIC_CHANNELS,
    SMOOTHING_WINDOW,
    STATIC_FEATURES,
    TARGET,
)

N_DYNAMIC = len(DYNAMIC_CHANNELS)
TREND_CHANNEL = N_DYNAMIC + 11
N_CHANNELS = TREND_CHANNEL + 1


class TaskSpec(BaseModel):
    """What one example predicts and from how much history."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["regression", "forecast", "daily_smoothed"] = "regression"
    seq_len: int = DEFAULT_SEQ_LEN
    horizon: int = 1
    smoothing_window: int = SMOOTHING_WINDOW
    daily_stride: int = DAILY_STRIDE
    climatology: Literal["annual_mean", "target_month"] = "annual_mean"

    @model_validator(mode="after")
    def _check(self) -> "TaskSpec":
        if self.seq_len < 1:
            raise InvalidTaskError(f"seq_len must be >= 1, got {self.seq_len}")
        if self.horizon < 1:
            raise InvalidTaskError(f"horizon must be >= 1, got {self.horizon}")
        if self.kind != "forecast" and self.horizon != 1:
            raise InvalidTaskError(f"{self.kind} predicts a single step; horizon must be 1")
        if self.smoothing_window < 1:
            raise InvalidTaskError("smoothing_window must be >= 1")
        if self.daily_stride < 1:
            raise InvalidTaskError("daily_stride must be >= 1")
        return self

    @classmethod
    def regression(cls, seq_len: int = DEFAULT_SEQ_LEN, **kwargs) -> "TaskSpec":
        return cls(kind="regression", seq_len=seq_len, **kwargs)

    @classmethod
    def forecast(cls, seq_len: int = DEFAULT_SEQ_LEN, horizon: int = 6, **kwargs) -> "TaskSpec":
        return cls(kind="forecast", seq_len=seq_len, horizon=horizon, **kwargs)

    @classmethod
    def daily(
        cls,
        seq_len: int = DAILY_SEQ_LEN,
        smoothing_window: int = SMOOTHING_WINDOW,
        daily_stride: int = DAILY_STRIDE,
        **kwargs,
    ) -> "TaskSpec":
        return cls(
            kind="daily_smoothed",
            seq_len=seq_len,
            smoothing_window=smoothing_window,
            daily_stride=daily_stride,
            **kwargs,
        )

    @property
    def n_targets(self) -> int:
        return self.horizon

    @property
    def flat_width(self) -> int:
        return N_DYNAMIC * self.seq_len + 12

    def first_target(self) -> int:
        """Earliest admissible target step inside a split view."""
        if self.kind == "daily_smoothed":
            return max(self.seq_len, self.smoothing_window - 1)
        return self.seq_len

    def target_steps(self, view_length: int) -> np.ndarray:
        stop = view_length - self.horizon + 1
        stride = self.daily_stride if self.kind == "daily_smoothed" else 1
        return np.arange(self.first_target(), max(stop, self.first_target()), stride)


def flat_feature_names(seq_len: int) -> List[str]:
    return lag_feature_names(seq_len) + dummy_feature_names() + ["trend"]


def sequence_channel_names() -> List[str]:
    return list(DYNAMIC_CHANNELS) + dummy_feature_names() + ["trend"]


def flat_from_sequence(sequence: np.ndarray, target_dummies: np.ndarray, target_trend) -> np.ndarray:
    """
    Flat vector(s) from sequence tensor(s): channel-major dynamic lags, then
    the target month's dummies, then the target's trend index.
    """
    sequence = np.asarray(sequence, dtype=np.float64)
    single = sequence.ndim == 2
    if single:
        sequence = sequence[None]
    n, seq_len, _ = sequence.shape
    lags = sequence[:, :, :N_DYNAMIC].transpose(0, 2, 1).reshape(n, N_DYNAMIC * seq_len)
    dummies = np.asarray(target_dummies, dtype=np.float64).reshape(n, 11)
    trend = np.asarray(target_trend, dtype=np.float64).reshape(n, 1)
    flat = np.concatenate([lags, dummies, trend], axis=1)
    return flat[0] if single else flat


@dataclass(frozen=True)
class SupervisedExample:
    basin_id: str
    target_time: np.datetime64
    flat_features: np.ndarray
    sequence_features: np.ndarray
    static_features: np.ndarray
    time_index: int
    targets: np.ndarray


@dataclass
class SupervisedSplit:
    """All examples of one split, pooled over basins in (basin_id, target_time) order."""

    name: str
    basin_ids: np.ndarray
    target_dates: np.ndarray
    input_dates: np.ndarray
    sequence: np.ndarray
    static: np.ndarray
    target_dummies: np.ndarray
    time_index: np.ndarray
    targets: np.ndarray
    targets_raw: np.ndarray
    _flat: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.basin_ids.shape[0])

    @property
    def seq_len(self) -> int:
        return int(self.sequence.shape[1])

    @property
    def flat(self) -> np.ndarray:
        if self._flat is None:
            self._flat = flat_from_sequence(self.sequence, self.target_dummies, self.time_index)
        return self._flat

    def basins(self) -> List[str]:
        return sorted(set(self.basin_ids.tolist()))

    def subset(self, mask: np.ndarray) -> "SupervisedSplit":
        return SupervisedSplit(
            name=self.name,
            basin_ids=self.basin_ids[mask],
            target_dates=self.target_dates[mask],
            input_dates=self.input_dates[mask],
            sequence=self.sequence[mask],
            static=self.static[mask],
            target_dummies=self.target_dummies[mask],
            time_index=self.time_index[mask],
            targets=self.targets[mask],
            targets_raw=self.targets_raw[mask],
        )

    def for_basin(self, basin_id: str) -> "SupervisedSplit":
        return self.subset(self.basin_ids == basin_id)

    def with_sequence(self, sequence: np.ndarray) -> "SupervisedSplit":
        """Copy with a replaced sequence tensor; the flat view follows it."""
        return replace(self, sequence=sequence)

    def example(self, i: int) -> SupervisedExample:
        return SupervisedExample(
            basin_id=str(self.basin_ids[i]),
            target_time=self.target_dates[i, 0],
            flat_features=self.flat[i],
            sequence_features=self.sequence[i],
            static_features=self.static[i],
            time_index=int(self.time_index[i]),
            targets=self.targets[i],
        )


@dataclass
class SupervisedSet:
    task: TaskSpec
    splits: Dict[str, SupervisedSplit]
    feature_names: List[str]
    sequence_channels: List[str]
    scalers: Dict[str, Scaler]
    static_scaler: Scaler
    epoch: date
    resolution: str
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> SupervisedSplit:
        return self.splits[name]

    def basins(self) -> List[str]:
        return sorted(self.scalers)

    def example_counts(self) -> Dict[str, int]:
        return {name: len(split) for name, split in self.splits.items()}

    def examples_per_basin(self) -> Dict[str, Dict[str, int]]:
        out = {}
        for name, split in self.splits.items():
            ids, counts = np.unique(split.basin_ids.astype(str), return_counts=True)
            out[name] = {str(b): int(c) for b, c in zip(ids, counts)}
        return out

    def inverse_targets(self, split: SupervisedSplit, values: np.ndarray) -> np.ndarray:
        """Scaled target-space values (n, H) back to mm, row by row per basin."""
        t = len(DYNAMIC_CHANNELS)
        mean = np.array([self.scalers[b].mean[t] for b in split.basin_ids])
        std = np.array([self.scalers[b].std[t] for b in split.basin_ids])
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            return values * std + mean
        return values * std[:, None] + mean[:, None]

    def manifest(self) -> Dict[str, Any]:
        return {
            "task": self.task.model_dump(),
            "feature_names": list(self.feature_names),
            "sequence_channels": list(self.sequence_channels),
            "static_features": list(STATIC_FEATURES),
            "epoch": self.epoch.isoformat(),
            "resolution": self.resolution,
            "example_counts": self.example_counts(),
            "provenance": dict(self.provenance),
        }


def _climatology_table(train_view: BasinSeries, static_scaler: Scaler) -> np.ndarray:
    """(12, 3) scaled training-period monthly climatology for the climatology statics."""
    months = train_view.months()
    table = np.zeros((12, len(CLIMATOLOGY_SOURCES)))
    for j, (static_name, source) in enumerate(CLIMATOLOGY_SOURCES.items()):
        values = train_view.channel(source)
        overall = values.mean()
        for m in range(1, 13):
            picked = values[months == m]
            table[m - 1, j] = picked.mean() if picked.size else overall
        table[:, j] = static_scaler.transform_column(static_name, table[:, j])
    return table


def _view_examples(
    view: BasinSeries,
    split_name: str,
    task: TaskSpec,
    scaler: Scaler,
    static_row: np.ndarray,
    climatology: Optional[np.ndarray],
    epoch: date,
) -> Dict[str, np.ndarray]:
    seq_len = task.seq_len
    length = len(view)
    steps = task.target_steps(length)
    if steps.size == 0:
        raise InsufficientHistoryError(
            f"basin {view.basin_id}: {split_name} split has {length} steps, "
            f"too few for seq_len={seq_len}, horizon={task.horizon}"
        )

    dynamic, target = scale_series(view, scaler)
    raw = view.target
    if task.kind == "daily_smoothed":
        raw = smooth_target(view.target, task.smoothing_window)
        target = scaler.transform_column(TARGET, raw)

    dates = view.axis.dates()
    months = dates.month.to_numpy()
    trend = view.axis.steps_between(epoch, view.axis.start_date) + np.arange(length, dtype=np.int64)
    dummies = month_dummy_matrix(months)

    start = steps - seq_len
    dyn_win = np.lib.stride_tricks.sliding_window_view(dynamic, seq_len, axis=0)[start]
    dum_win = np.lib.stride_tricks.sliding_window_view(dummies, seq_len, axis=0)[start]
    trend_win = np.lib.stride_tricks.sliding_window_view(trend, seq_len)[start]
    sequence = np.concatenate(
        [
            dyn_win.transpose(0, 2, 1),
            dum_win.transpose(0, 2, 1),
            trend_win[:, :, None].astype(np.float64),
        ],
        axis=2,
    )

    n = steps.size
    target_idx = steps[:, None] + np.arange(task.n_targets)
    static = np.tile(static_row, (n, 1))
    if climatology is not None:
        static[:, 8:11] = climatology[months[steps] - 1]

    day_values = dates.values.astype("datetime64[D]")
    return {
        "basin_ids": np.full(n, view.basin_id, dtype=object),
        "target_dates": day_values[target_idx],
        "input_dates": np.stack([day_values[start], day_values[steps - 1]], axis=1),
        "sequence": sequence,
        "static": static,
        "target_dummies": dummies[steps],
        "time_index": trend[steps],
        "targets": target[target_idx],
        "targets_raw": raw[target_idx],
    }


def assemble_supervised(
    series: Sequence[BasinSeries],
    task: TaskSpec,
    split: SplitSpec,
    scalers: Optional[Dict[str, Scaler]] = None,
    static_scaler: Optional[Scaler] = None,
    provenance: Optional[Dict[str, Any]] = None,
) -> SupervisedSet:
    """
    Window every basin into supervised examples for one task.

    Args:
        series: Basin records (any order; output is ordered by basin_id)
        task: Task definition
        split: Date ranges; windows never cross a range boundary
        scalers: Optional per-basin scalers; fit on each training view otherwise
        static_scaler: Optional across-basin static scaler
        provenance: Extra fields recorded in the manifest (variant, source)

    Returns:
        SupervisedSet with one SupervisedSplit per range
    """
    if not series:
        raise InsufficientHistoryError("no basins to assemble")
    series = sorted(series, key=lambda s: s.basin_id)

    resolutions = {s.axis.resolution for s in series}
    if len(resolutions) != 1:
        raise ResolutionMismatchError(f"mixed resolutions in one dataset: {sorted(resolutions)}")
    resolution = resolutions.pop()
    if task.kind == "daily_smoothed" and resolution != DAILY:
        raise ResolutionMismatchError(f"daily_smoothed needs daily series, got {resolution}")

    views = {s.basin_id: split_series(s, split) for s in series}
    epoch = min(v["train"].axis.start_date for v in views.values())
    scalers = dict(scalers) if scalers else {b: fit_scaler(v["train"]) for b, v in views.items()}
    static_scaler = static_scaler or fit_static_scaler(series)

    parts: Dict[str, List[Dict[str, np.ndarray]]] = {name: [] for name, _ in split.ranges()}
    for s in series:
        static_row = static_scaler.transform(s.static)
        climatology = None
        if task.climatology == "target_month":
            climatology = _climatology_table(views[s.basin_id]["train"], static_scaler)
        for name, view in views[s.basin_id].items():
            parts[name].append(
                _view_examples(view, name, task, scalers[s.basin_id], static_row, climatology, epoch)
            )

    splits = {
        name: SupervisedSplit(
            name=name,
            **{key: np.concatenate([p[key] for p in pieces]) for key in pieces[0]},
        )
        for name, pieces in parts.items()
    }

    sset = SupervisedSet(
        task=task,
        splits=splits,
        feature_names=flat_feature_names(task.seq_len),
        sequence_channels=sequence_channel_names(),
        scalers=scalers,
        static_scaler=static_scaler,
        epoch=epoch,
        resolution=resolution,
        provenance={
            **(provenance or {}),
            "split": split.to_dict(),
            "scaler_id": calculate_checksum({b: sc.to_dict() for b, sc in sorted(scalers.items())}),
            "static_scaler_id": calculate_checksum(static_scaler.to_dict()),
        },
    )
    check_leakage(sset, split)

    logger.info(
        f"Assembled {task.kind} set (L={task.seq_len}, H={task.horizon}) over {len(series)} basins: "
        + ", ".join(f"{k}={v}" for k, v in sset.example_counts().items())
    )
    return sset


def check_leakage(sset: SupervisedSet, split: SplitSpec) -> None:
    """
    Every example's inputs precede its targets, and inputs and targets stay
    inside the example's own split.
    """
    for name, (start, end) in split.ranges():
        if name not in sset.splits:
            continue
        part = sset.splits[name]
        lo, hi = np.datetime64(start, "D"), np.datetime64(end, "D")
        first_in, last_in = part.input_dates[:, 0], part.input_dates[:, 1]
        bad = (first_in < lo) | (last_in >= part.target_dates[:, 0]) | (part.target_dates[:, -1] > hi)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise SplitLeakageError(
                f"example {i} of split {name} (basin {part.basin_ids[i]}, target "
                f"{part.target_dates[i, 0]}) straddles [{start}, {end}]"
            )
