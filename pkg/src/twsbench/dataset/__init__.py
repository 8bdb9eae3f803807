"""
Basin time-series dataset: loading, validation, splits, scaling and
synthetic generation.
"""

from .loader import Violation, infer_resolution, load_basin_series, validate_basin_files
from .splits import fit_scaler, fit_static_scaler, scale_series, split_series
from .storage import get_output_paths, save_generation_manifest, write_basin_series
from .synthetic import generate_synthetic, trending_basins
from .types import BasinSeries, Scaler, SplitSpec, SyntheticConfig, TimeAxis

__all__ = [
    "BasinSeries",
    "Scaler",
    "SplitSpec",
    "SyntheticConfig",
    "TimeAxis",
    "Violation",
    "infer_resolution",
    "load_basin_series",
    "validate_basin_files",
    "split_series",
    "fit_scaler",
    "fit_static_scaler",
    "scale_series",
    "generate_synthetic",
    "trending_basins",
    "write_basin_series",
    "save_generation_manifest",
    "get_output_paths",
]
