"""
Run provenance: checksums of inputs and configs, and the RunManifest record
written next to every report directory.
"""

import hashlib
import json
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field


def calculate_checksum(data: Any) -> str:
    """Calculate MD5 checksum of JSON-serializable data for integrity verification."""
    data_str = json.dumps(data, sort_keys=True, default=str)
    return hashlib.md5(data_str.encode()).hexdigest()


def file_checksum(path: Union[str, Path]) -> str:
    """MD5 of a file's bytes."""
    digest = hashlib.md5()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def inputs_checksum(paths: List[Union[str, Path]]) -> str:
    """Combined checksum of several input files, order-sensitive."""
    return calculate_checksum([file_checksum(p) for p in paths])


def series_checksum(series) -> str:
    """MD5 over every basin's id and little-endian float64 arrays, in basin order."""
    digest = hashlib.md5()
    for s in sorted(series, key=lambda s: s.basin_id):
        digest.update(s.basin_id.encode())
        for values in (s.dynamic, s.target, s.static):
            digest.update(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    """Versions of the numerical stack that determine bitwise results."""
    import pandas
    import scipy

    from twsbench import __version__

    return {
        "twsbench": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pandas.__version__,
    }


class RunManifest(BaseModel):
    """Everything needed to reproduce a run. Wall-clock lives in timing.json."""

    experiment: str
    config: Dict[str, Any]
    seed: int
    input_hash: str
    feature_manifests: Dict[str, Any] = Field(default_factory=dict)
    example_counts: Dict[str, Any] = Field(default_factory=dict)
    versions: Dict[str, str] = Field(default_factory=package_versions)
    notes: List[str] = Field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def checksum(self) -> str:
        return calculate_checksum(self.to_dict())


def load_manifest(path: Union[str, Path]) -> Optional[Dict[str, Any]]:
    """Read a manifest.json, or None when absent."""
    path = Path(path)
    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
