"""
Storage module for basin series.
Writes the dynamic / static CSV pair and the generation manifest.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from twsbench.core.manifest import calculate_checksum, file_checksum
from twsbench.dataset.types import BasinSeries
from twsbench.utils.constants import (
    DATE_FORMAT,
    DYNAMIC_CHANNELS,
    DYNAMIC_HEADER,
    FLOAT_FORMAT,
    STATIC_FEATURES,
    STATIC_HEADER,
    TARGET,
)

DYNAMIC_FILE = "dynamic.csv"
STATIC_FILE = "static.csv"
MANIFEST_FILE = "synth_manifest.json"


def get_output_paths(base_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """
    Standard file locations inside a dataset directory.

    Args:
        base_dir: Dataset directory

    Returns:
        (dynamic CSV path, static CSV path)
    """
    base_dir = Path(base_dir)
    return base_dir / DYNAMIC_FILE, base_dir / STATIC_FILE


def write_basin_series(
    series: Sequence[BasinSeries],
    dynamic_path: Union[str, Path],
    static_path: Union[str, Path],
) -> None:
    """
    Write series in the long dynamic / wide static CSV schemas.

    Floats use 17 significant digits so a reload is bit-identical.
    """
    ordered = sorted(series, key=lambda s: s.basin_id)

    dynamic_frames = []
    for s in ordered:
        frame = pd.DataFrame(s.dynamic, columns=list(DYNAMIC_CHANNELS))
        frame.insert(0, "date", s.axis.dates().strftime(DATE_FORMAT))
        frame.insert(0, "basin_id", s.basin_id)
        frame[TARGET] = s.target
        dynamic_frames.append(frame)
    dynamic = pd.concat(dynamic_frames, ignore_index=True)[list(DYNAMIC_HEADER)]

    static = pd.DataFrame(np.stack([s.static for s in ordered]), columns=list(STATIC_FEATURES))
    static.insert(0, "basin_id", [s.basin_id for s in ordered])
    static = static[list(STATIC_HEADER)]

    for path in (dynamic_path, static_path):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

    dynamic.to_csv(dynamic_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    static.to_csv(static_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.success(f"Saved {len(ordered)} basins to: {dynamic_path}, {static_path}")


def save_generation_manifest(
    config: Dict[str, Any],
    series: Sequence[BasinSeries],
    base_dir: Union[str, Path],
) -> Path:
    """
    Save the generator config and file checksums next to the CSVs.

    Args:
        config: Resolved SyntheticConfig as a JSON-ready dict
        series: Generated basins
        base_dir: Dataset directory holding the CSV pair

    Returns:
        Path to the saved manifest
    """
    dynamic_path, static_path = get_output_paths(base_dir)
    first = series[0].axis
    data = {
        "generator": "twsbench.dataset.synthetic",
        "config": config,
        "config_checksum": calculate_checksum(config),
        "n_basins": len(series),
        "resolution": first.resolution,
        "steps_per_basin": first.length,
        "dynamic_rows": sum(len(s) for s in series),
        "files": {
            DYNAMIC_FILE: file_checksum(dynamic_path),
            STATIC_FILE: file_checksum(static_path),
        },
        "storage": {
            "format": "JSON",
            "encoding": "UTF-8",
        },
    }

    output_path = Path(base_dir) / MANIFEST_FILE
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)

    logger.success(f"Saved generation manifest to: {output_path}")
    return output_path
