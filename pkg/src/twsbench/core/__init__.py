"""Core plumbing: errors, provenance and parallel execution."""

from .manifest import RunManifest, calculate_checksum, file_checksum, inputs_checksum, series_checksum
from .parallel import derive_seed, run_jobs

__all__ = [
    "RunManifest",
    "calculate_checksum",
    "file_checksum",
    "inputs_checksum",
    "series_checksum",
    "derive_seed",
    "run_jobs",
]
