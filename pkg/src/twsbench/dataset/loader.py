"""
Loader for basin-averaged CSV exports.

validate_basin_files collects every violation it can find; load_basin_series
raises the first one and otherwise builds one BasinSeries per basin.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from twsbench.core.errors import (
    DatasetError,
    GapError,
    MissingValueError,
    OrphanBasinError,
    SchemaError,
)
from twsbench.dataset.types import BasinSeries, TimeAxis
from twsbench.utils.constants import (
    DAILY,
    DATE_FORMAT,
    DYNAMIC_CHANNELS,
    DYNAMIC_HEADER,
    MONTHLY,
    STATIC_FEATURES,
    STATIC_HEADER,
    TARGET,
)

PathLike = Union[str, Path]

_ERRORS = {
    "schema": SchemaError,
    "missing": MissingValueError,
    "non_finite": MissingValueError,
    "gap": GapError,
    "orphan": OrphanBasinError,
}


@dataclass(frozen=True)
class Violation:
    """One problem found in the input files."""

    kind: str
    message: str
    basin_id: Optional[str] = None
    date: Optional[str] = None
    column: Optional[str] = None

    def to_error(self) -> DatasetError:
        error_cls = _ERRORS.get(self.kind, SchemaError)
        return error_cls(self.message, basin_id=self.basin_id, date=self.date, column=self.column)

    def __str__(self) -> str:
        parts = [self.kind]
        if self.basin_id is not None:
            parts.append(f"basin={self.basin_id}")
        if self.date is not None:
            parts.append(f"date={self.date}")
        if self.column is not None:
            parts.append(f"column={self.column}")
        return f"[{' '.join(parts)}] {self.message}"


def _read_csv(path: PathLike, header: Tuple[str, ...], label: str) -> Tuple[Optional[pd.DataFrame], List[Violation]]:
    try:
        frame = pd.read_csv(path, dtype={"basin_id": str}, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        return None, [Violation("schema", f"{label} file {path} is empty")]
    except FileNotFoundError:
        return None, [Violation("schema", f"{label} file {path} does not exist")]

    if tuple(frame.columns) != header:
        return None, [
            Violation(
                "schema",
                f"{label} header {list(frame.columns)} does not match {list(header)}",
            )
        ]
    if frame.empty:
        return None, [Violation("schema", f"{label} file {path} has no rows")]
    return frame, []


def _numeric_violations(frame: pd.DataFrame, columns, label: str, date_col: bool) -> List[Violation]:
    violations = []
    for column in columns:
        raw = frame[column]
        values = pd.to_numeric(raw, errors="coerce")
        for idx in np.flatnonzero(raw.isna().to_numpy()):
            row = frame.iloc[idx]
            violations.append(
                Violation(
                    "missing",
                    f"missing value in {label}",
                    basin_id=str(row["basin_id"]),
                    date=str(row["date"]) if date_col else None,
                    column=column,
                )
            )
        bad = values.isna() & raw.notna()
        bad |= ~np.isfinite(values.fillna(0.0))
        for idx in np.flatnonzero(bad.to_numpy()):
            row = frame.iloc[idx]
            violations.append(
                Violation(
                    "non_finite",
                    f"non-numeric or non-finite value {raw.iloc[idx]!r} in {label}",
                    basin_id=str(row["basin_id"]),
                    date=str(row["date"]) if date_col else None,
                    column=column,
                )
            )
    return violations


def infer_resolution(dates: pd.DatetimeIndex) -> str:
    """Monthly when every date is the first of a month and steps are not daily."""
    if (dates.day == 1).all() and (len(dates) == 1 or (dates[1] - dates[0]).days >= 28):
        return MONTHLY
    return DAILY


def _basin_axis(basin_id: str, dates: pd.DatetimeIndex) -> Tuple[Optional[TimeAxis], List[Violation]]:
    resolution = infer_resolution(dates)
    axis = TimeAxis(dates[0].date(), resolution, len(dates))
    expected = axis.dates()
    mismatch = np.flatnonzero(expected.to_numpy() != dates.to_numpy())
    if mismatch.size:
        i = int(mismatch[0])
        previous = dates[i - 1].strftime(DATE_FORMAT) if i > 0 else "start"
        return None, [
            Violation(
                "gap",
                f"{resolution} series jumps from {previous} to {dates[i].strftime(DATE_FORMAT)}",
                basin_id=basin_id,
                date=dates[i].strftime(DATE_FORMAT),
            )
        ]
    return axis, []


def _scan(dynamic_path: PathLike, static_path: PathLike):
    violations: List[Violation] = []

    dynamic, found = _read_csv(dynamic_path, DYNAMIC_HEADER, "dynamic")
    violations += found
    static, found = _read_csv(static_path, STATIC_HEADER, "static")
    violations += found
    if dynamic is None or static is None:
        return None, violations

    dates = pd.to_datetime(dynamic["date"], format=DATE_FORMAT, errors="coerce")
    for idx in np.flatnonzero(dates.isna().to_numpy()):
        row = dynamic.iloc[idx]
        kind = "missing" if pd.isna(row["date"]) else "schema"
        violations.append(
            Violation(kind, "date is missing or not YYYY-MM-DD", basin_id=str(row["basin_id"]), column="date")
        )
    for idx in np.flatnonzero(dynamic["basin_id"].isna().to_numpy()):
        violations.append(Violation("missing", f"basin_id missing on dynamic row {idx + 2}", column="basin_id"))

    violations += _numeric_violations(dynamic, DYNAMIC_CHANNELS + (TARGET,), "dynamic", date_col=True)
    violations += _numeric_violations(static, STATIC_FEATURES, "static", date_col=False)

    duplicated = static["basin_id"][static["basin_id"].duplicated()]
    for basin_id in duplicated:
        violations.append(Violation("schema", "basin listed twice in static file", basin_id=str(basin_id)))

    if violations:
        return None, violations

    dynamic = dynamic.assign(date=dates)
    keys = list(zip(dynamic["basin_id"], dynamic["date"]))
    if keys != sorted(keys):
        violations.append(Violation("schema", "dynamic rows are not sorted by (basin_id, date)"))

    static_ids = set(static["basin_id"])
    axes: Dict[str, TimeAxis] = {}
    for basin_id, rows in dynamic.groupby("basin_id", sort=True):
        if basin_id not in static_ids:
            violations.append(
                Violation("orphan", "basin has dynamic rows but no static row", basin_id=str(basin_id))
            )
        axis, found = _basin_axis(str(basin_id), pd.DatetimeIndex(rows["date"].sort_values()))
        violations += found
        if axis is not None:
            axes[str(basin_id)] = axis

    unused = sorted(static_ids - set(dynamic["basin_id"]))
    if unused:
        logger.warning(f"{len(unused)} static basins have no dynamic rows (first: {unused[0]})")

    return (dynamic, static, axes), violations


def validate_basin_files(dynamic_path: PathLike, static_path: PathLike) -> List[Violation]:
    """
    Run every dataset check without raising.

    Args:
        dynamic_path: Long-format dynamic CSV
        static_path: One-row-per-basin static CSV

    Returns:
        Violations in discovery order; empty when the files are clean
    """
    _, violations = _scan(dynamic_path, static_path)
    return violations


def load_basin_series(dynamic_path: PathLike, static_path: PathLike) -> List[BasinSeries]:
    """
    Load one BasinSeries per basin, ordered by basin_id.

    Raises:
        DatasetError subclass for the first violation found
    """
    parsed, violations = _scan(dynamic_path, static_path)
    if violations:
        logger.error(f"{len(violations)} violation(s) in {dynamic_path} / {static_path}")
        raise violations[0].to_error()

    dynamic, static, axes = parsed
    static = static.set_index("basin_id")
    series = []
    for basin_id, rows in dynamic.groupby("basin_id", sort=True):
        basin_id = str(basin_id)
        rows = rows.sort_values("date")
        series.append(
            BasinSeries(
                basin_id=basin_id,
                axis=axes[basin_id],
                dynamic=rows[list(DYNAMIC_CHANNELS)].to_numpy(dtype=np.float64),
                target=rows[TARGET].to_numpy(dtype=np.float64),
                static=static.loc[basin_id, list(STATIC_FEATURES)].to_numpy(dtype=np.float64),
            )
        )

    logger.info(
        f"Loaded {len(series)} basins ({series[0].axis.resolution}, "
        f"{series[0].axis.length} steps) from {dynamic_path}"
    )
    return series

