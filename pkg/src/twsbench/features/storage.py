"""
Storage module for feature manifests.
"""

import json
import os
from pathlib import Path
from typing import Union

from loguru import logger

from twsbench.features.assemble import SupervisedSet


def get_output_path(base_dir: Union[str, Path], label: str) -> Path:
    """
    Manifest location for one supervised set.

    Args:
        base_dir: Report directory
        label: Set label, e.g. "linear" or "neural_L12"

    Returns:
        Path of the JSON file
    """
    return Path(base_dir) / "features" / f"{label}.json"


def save_feature_manifest(sset: SupervisedSet, base_dir: Union[str, Path], label: str) -> Path:
    """Write ordered feature names, task spec and per-split example counts."""
    output_path = get_output_path(base_dir, label)
    os.makedirs(output_path.parent, exist_ok=True)

    data = sset.manifest()
    data["examples_per_basin"] = sset.examples_per_basin()
    data["storage"] = {"format": "JSON", "encoding": "UTF-8", "label": label}

    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)

    logger.success(f"Saved feature manifest to: {output_path}")
    return output_path
