"""
Experiment configuration: declarative ExperimentConfig, config-file loading
and resolution of neural hyperparameter profiles.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from twsbench.core.errors import ConfigError
from twsbench.dataset.types import SyntheticConfig
from twsbench.models.neural.training import TrainConfig
from twsbench.utils.constants import (
    ALL_MODELS,
    BOOSTED,
    DAILY_LENGTH,
    DAILY_SEQ_LEN,
    DAILY_STRIDE,
    DEFAULT_SEQ_LEN,
    DESK_BASINS,
    DESK_OVERRIDES,
    HYPERPARAMETER_COLUMNS,
    LINEAR_GLOB,
    LINEAR_SINGLE,
    LSTM,
    MAX_HORIZON,
    PAPER_BASINS,
    PAPER_MAX_EPOCHS,
    RANDOM_FOREST,
    SEQ_LEN_SWEEP,
    SMOOTHING_WINDOW,
    TFT_LITE,
    TFT_LITE_NO_TIME,
)

ExperimentKind = Literal[
    "regression_tournament",
    "seq_len_sweep",
    "forecast_sweep",
    "daily_smoothed",
    "time_index_ablation",
    "tree_baselines",
]

TOURNAMENT_MODELS = (LINEAR_SINGLE, LINEAR_GLOB, LSTM, TFT_LITE)
ALLOWED_MODELS = {
    "regression_tournament": TOURNAMENT_MODELS,
    "seq_len_sweep": TOURNAMENT_MODELS,
    "forecast_sweep": TOURNAMENT_MODELS,
    "daily_smoothed": TOURNAMENT_MODELS,
    "time_index_ablation": (LINEAR_SINGLE, TFT_LITE, TFT_LITE_NO_TIME),
    "tree_baselines": (LINEAR_SINGLE, RANDOM_FOREST, BOOSTED),
}


class NeuralOverrides(BaseModel):
    """Values applied on top of the resolved hyperparameter profile."""

    model_config = ConfigDict(extra="forbid")

    hidden_size: Optional[int] = None
    d_model: Optional[int] = None
    nheads: Optional[int] = None
    max_epochs: Optional[int] = None
    batch_size: Optional[int] = None
    learning_rate: Optional[float] = None
    dropout: Optional[float] = None
    patience: Optional[int] = None
    quantiles: Optional[List[float]] = None


class ExperimentConfig(BaseModel):
    """One named experiment over one dataset."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentKind = "regression_tournament"
    variant: Literal["ol-like", "da-like", "real"] = "ol-like"
    dataset: Optional[str] = None
    synthetic: Optional[SyntheticConfig] = None
    n_basins: Optional[int] = None
    models: Optional[List[str]] = None

    seq_len: Optional[int] = None
    seq_lens: List[int] = list(SEQ_LEN_SWEEP)
    horizon: Optional[int] = None
    smoothing_window: int = SMOOTHING_WINDOW
    daily_stride: int = DAILY_STRIDE
    climatology: Literal["annual_mean", "target_month"] = "annual_mean"

    profile: Literal["desk", "paper"] = "desk"
    hyper_column: Optional[Literal["ol", "da"]] = None
    neural: NeuralOverrides = Field(default_factory=NeuralOverrides)
    grids: Dict[str, Dict[str, List[Any]]] = {}

    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    save_models: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        kind = self.experiment
        allowed = ALLOWED_MODELS[kind]
        for name in self.models or []:
            if name not in ALL_MODELS:
                raise ConfigError(f"unknown model {name!r}; expected one of {list(ALL_MODELS)}")
            if name not in allowed:
                raise ConfigError(f"{kind} does not run {name}; allowed: {list(allowed)}")
        if self.models is not None and not self.models:
            raise ConfigError("model list is empty")
        if len(set(self.models or [])) != len(self.models or []):
            raise ConfigError("model list has duplicates")

        if kind == "seq_len_sweep":
            if self.seq_len is not None:
                raise ConfigError("seq_len_sweep takes seq_lens, not a single seq_len")
            if not self.seq_lens or any(L < 1 for L in self.seq_lens):
                raise ConfigError("seq_lens must be a nonempty list of positive lengths")
        if self.horizon is not None:
            if kind != "forecast_sweep" and self.horizon != 1:
                raise ConfigError(f"{kind} predicts one step ahead; horizon applies to forecast_sweep only")
            if self.horizon < 1:
                raise ConfigError("horizon must be >= 1")
        if kind == "time_index_ablation" and self.models is not None and TFT_LITE not in self.models:
            raise ConfigError("time_index_ablation needs TFT-lite in the model list")
        if kind == "tree_baselines" and self.models is not None and LINEAR_SINGLE not in self.models:
            raise ConfigError("tree_baselines compares against Linear_single; keep it in the model list")
        for family in self.grids:
            if family not in ("rf", "gbm"):
                raise ConfigError(f"grid override for unknown family {family!r}")
        if self.variant == "real" and self.dataset is None:
            raise ConfigError("variant 'real' needs a dataset directory")
        if self.dataset is not None and self.synthetic is not None:
            raise ConfigError("give either dataset or synthetic, not both")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def model_list(self) -> List[str]:
        if self.models is not None:
            return list(self.models)
        if self.experiment == "time_index_ablation":
            return [LINEAR_SINGLE, TFT_LITE, TFT_LITE_NO_TIME]
        return list(ALLOWED_MODELS[self.experiment])

    def resolved_seq_len(self) -> int:
        if self.seq_len is not None:
            return self.seq_len
        return DAILY_SEQ_LEN if self.experiment == "daily_smoothed" else DEFAULT_SEQ_LEN

    def resolved_horizon(self) -> int:
        if self.experiment != "forecast_sweep":
            return 1
        return self.horizon if self.horizon is not None else MAX_HORIZON

    def column(self) -> str:
        """Hyperparameter column: data-assimilation values for da-like data."""
        if self.hyper_column is not None:
            return self.hyper_column
        return "da" if self.variant == "da-like" else "ol"

    def synthetic_config(self) -> SyntheticConfig:
        """Generator config used when no dataset directory is given."""
        if self.synthetic is not None:
            return self.synthetic
        n_basins = self.n_basins or (PAPER_BASINS if self.profile == "paper" else DESK_BASINS)
        params: Dict[str, Any] = {"n_basins": n_basins, "seed": self.seed}
        if self.experiment == "daily_smoothed":
            params.update(resolution="daily", length=DAILY_LENGTH)
        if self.variant == "da-like":
            return SyntheticConfig.da_like(**params)
        return SyntheticConfig.ol_like(**params)


def resolve_train_config(
    kind: Literal["lstm", "tft"],
    config: ExperimentConfig,
    use_time_index: bool = True,
) -> TrainConfig:
    """
    Hyperparameters for one neural model.

    The paper profile takes its hyperparameter column verbatim; the desk profile
    keeps its learning rate, dropout and init but shrinks sizes and epochs.
    Explicit `neural` overrides win over both.
    """
    column = dict(HYPERPARAMETER_COLUMNS[kind][config.column()])
    values: Dict[str, Any] = {
        "learning_rate": column["learning_rate"],
        "dropout": column["dropout"],
        "init": column["init"],
        "hidden_size": column["hidden_size"],
        "nheads": column.get("nheads", 1),
        "max_epochs": PAPER_MAX_EPOCHS,
    }
    if config.profile == "desk":
        values["hidden_size"] = DESK_OVERRIDES["hidden_size"]
        values["nheads"] = DESK_OVERRIDES["nheads"]
        values["max_epochs"] = DESK_OVERRIDES["max_epochs"]

    overrides = config.neural.model_dump(exclude_none=True)
    size_key = "d_model" if kind == "tft" else "hidden_size"
    if size_key in overrides:
        values["hidden_size"] = overrides[size_key]
    for key in ("nheads", "max_epochs", "batch_size", "learning_rate", "dropout", "patience", "quantiles"):
        if key in overrides and (key != "nheads" or kind == "tft"):
            values[key] = overrides[key]

    values["seed"] = config.seed
    values["use_time_index"] = use_time_index
    return TrainConfig(**values)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Mapping stored in a .json, .yaml or .yml file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(f) or {}
        elif path.suffix.lower() == ".json":
            data = json.load(f)
        else:
            raise ConfigError(f"unsupported config format {path.suffix!r}; use .json or .yaml")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return data


def load_experiment_config(path: Union[str, Path], **overrides) -> ExperimentConfig:
    """
    Read a config file and apply flag overrides (flags win).

    Args:
        path: .json, .yaml or .yml file
        overrides: Non-None values replace file values

    Returns:
        Validated ExperimentConfig
    """
    data = read_config_file(path)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)
