"""
Shared fixtures: small seeded synthetic datasets on disk and in memory.
"""

from datetime import date

import numpy as np
import pytest

from twsbench.dataset.storage import get_output_paths, save_generation_manifest, write_basin_series
from twsbench.dataset.synthetic import generate_synthetic
from twsbench.dataset.types import BasinSeries, SyntheticConfig, TimeAxis


@pytest.fixture
def small_config():
    return SyntheticConfig.ol_like(n_basins=3, seed=7)


@pytest.fixture
def small_series(small_config):
    return generate_synthetic(small_config)


@pytest.fixture
def dataset_dir(tmp_path, small_config, small_series):
    base_dir = tmp_path / "dataset"
    dynamic_path, static_path = get_output_paths(base_dir)
    write_basin_series(small_series, dynamic_path, static_path)
    save_generation_manifest(small_config.model_dump(mode="json"), small_series, base_dir)
    return base_dir


def _make_series(basin_id="B0001", length=216, target=None, dynamic=None, static=None, resolution="monthly"):
    """Hand-built BasinSeries; unspecified blocks are seeded noise."""
    rng = np.random.default_rng(int.from_bytes(basin_id.encode(), "little") % (2**32))
    axis = TimeAxis(date(2003, 1, 1), resolution, length)
    if dynamic is None:
        dynamic = rng.normal(size=(length, 4))
    if target is None:
        target = rng.normal(size=length)
    if static is None:
        static = rng.normal(size=11)
    return BasinSeries(basin_id=basin_id, axis=axis, dynamic=dynamic, target=target, static=static)


@pytest.fixture
def make_series():
    return _make_series
