"""
Storage module for neural models.
Checkpoints are an .npz tensor map keyed by canonical parameter names plus a
JSON sidecar with the architecture; training history is a CSV.
"""

import json
import os
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd
from loguru import logger

from twsbench.core.errors import InvalidParamsError, ShapeMismatchError
from twsbench.core.manifest import calculate_checksum
from twsbench.models.neural.base import SequenceModel
from twsbench.models.neural.lstm import LSTMModel
from twsbench.models.neural.tft_lite import TFTLiteModel
from twsbench.models.neural.training import EpochRecord


def get_output_paths(base_dir: Union[str, Path], name: str):
    """(tensor file, sidecar JSON) for a checkpoint name."""
    base_dir = Path(base_dir)
    return base_dir / f"{name}.npz", base_dir / f"{name}.json"


def save_checkpoint(model: SequenceModel, base_dir: Union[str, Path], name: str) -> Path:
    tensor_path, sidecar_path = get_output_paths(base_dir, name)
    os.makedirs(tensor_path.parent, exist_ok=True)
    np.savez(tensor_path, **model.params)

    sidecar = {
        "architecture": model.architecture(),
        "parameters": {k: list(v.shape) for k, v in sorted(model.params.items())},
        "checksum": calculate_checksum({k: v.tolist() for k, v in sorted(model.params.items())}),
        "storage": {"format": "NPZ+JSON", "encoding": "UTF-8"},
    }
    with open(sidecar_path, "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2, ensure_ascii=False)

    logger.success(f"Saved checkpoint to: {tensor_path}")
    return tensor_path


def load_checkpoint(base_dir: Union[str, Path], name: str) -> SequenceModel:
    tensor_path, sidecar_path = get_output_paths(base_dir, name)
    with open(sidecar_path, "r", encoding="utf-8") as f:
        arch = json.load(f)["architecture"]

    common = dict(
        hidden_size=arch["hidden_size"],
        horizon=arch["horizon"],
        quantiles=arch["quantiles"],
        dropout=arch["dropout"],
        init=arch["init"],
        time_mean=arch["time_mean"],
        time_std=arch["time_std"],
    )
    if arch["kind"] == "lstm":
        model = LSTMModel(**common)
    elif arch["kind"] == "tft":
        model = TFTLiteModel(nheads=arch["nheads"], use_time_index=arch["use_time_index"], **common)
    else:
        raise InvalidParamsError(f"unknown checkpoint kind {arch['kind']!r}")

    with np.load(tensor_path) as data:
        loaded = {name: np.array(data[name], dtype=np.float64) for name in data.files}
    if set(loaded) != set(model.params):
        raise ShapeMismatchError(f"checkpoint parameters {sorted(loaded)} do not match {model.kind}")
    for name, value in loaded.items():
        if value.shape != model.params[name].shape:
            raise ShapeMismatchError(f"{name}: checkpoint shape {value.shape} != {model.params[name].shape}")
    model.params = loaded
    model.trained = True
    return model


def save_history(history: List[EpochRecord], output_path: Union[str, Path]) -> Path:
    output_path = Path(output_path)
    os.makedirs(output_path.parent, exist_ok=True)
    frame = pd.DataFrame(
        [(r.epoch, r.train_loss, r.val_loss) for r in history],
        columns=["epoch", "train_loss", "val_loss"],
    )
    frame.to_csv(output_path, index=False, float_format="%.17g", lineterminator="\n")
    logger.success(f"Saved training history to: {output_path}")
    return output_path
