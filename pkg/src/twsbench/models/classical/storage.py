"""
Storage module for classical models.
JSON dumps sufficient to reload and predict bit-identically.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
from loguru import logger

from twsbench.core.errors import InvalidParamsError
from twsbench.models.classical.boosted import BoostedModel
from twsbench.models.classical.forest import ForestModel
from twsbench.models.classical.linear import LinearModel
from twsbench.models.classical.tree import TreeNode


def dump_model(model: Any) -> Dict[str, Any]:
    """JSON-ready dict for any classical model."""
    if isinstance(model, LinearModel):
        names = model.feature_names or [f"x{i}" for i in range(model.weights.shape[0])]
        return {
            "kind": "linear",
            "fitted_on": model.fitted_on,
            "intercept": model.intercept,
            "weights": {name: float(w) for name, w in zip(names, model.weights)},
            "dropped_columns": [names[i] for i in model.dropped_columns],
        }
    if isinstance(model, TreeNode):
        return {"kind": "tree", "root": model.to_dict()}
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "params": model.params,
            "seeds": model.seeds,
            "bootstrap": model.bootstrap,
            "trees": [tree.to_dict() for tree in model.trees],
        }
    if isinstance(model, BoostedModel):
        return {
            "kind": "boosted",
            "init": model.init,
            "learning_rate": model.learning_rate,
            "n_bins": model.n_bins,
            "params": model.params,
            "trees": [tree.to_dict() for tree in model.trees],
        }
    raise InvalidParamsError(f"cannot dump model of type {type(model).__name__}")


def load_model(data: Dict[str, Any]) -> Any:
    kind = data.get("kind")
    if kind == "linear":
        names = list(data["weights"])
        return LinearModel(
            weights=np.array([data["weights"][n] for n in names], dtype=np.float64),
            intercept=float(data["intercept"]),
            fitted_on=data["fitted_on"],
            dropped_columns=[names.index(n) for n in data["dropped_columns"]],
            feature_names=names,
        )
    if kind == "tree":
        return TreeNode.from_dict(data["root"])
    if kind == "forest":
        return ForestModel(
            trees=[TreeNode.from_dict(t) for t in data["trees"]],
            seeds=list(data["seeds"]),
            params=dict(data["params"]),
            bootstrap=bool(data["bootstrap"]),
        )
    if kind == "boosted":
        return BoostedModel(
            init=float(data["init"]),
            trees=[TreeNode.from_dict(t) for t in data["trees"]],
            learning_rate=float(data["learning_rate"]),
            params=dict(data["params"]),
            n_bins=int(data["n_bins"]),
        )
    raise InvalidParamsError(f"unknown model kind {kind!r}")


def save_model(model: Any, output_path: Union[str, Path]) -> str:
    """
    Save a classical model dump to a JSON file.

    Args:
        model: LinearModel, TreeNode, ForestModel or BoostedModel
        output_path: Target file

    Returns:
        Path to the saved file
    """
    output_path = str(output_path)
    os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(dump_model(model), f, indent=2, ensure_ascii=False)
    logger.success(f"Saved model to: {output_path}")
    return output_path


def read_model(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return load_model(json.load(f))
