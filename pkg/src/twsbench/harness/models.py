"""
Fitted-model wrappers giving every family the same surface:
predict_split(split) -> (n, H) predictions in scaled target space.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from twsbench.core.errors import FitError, MissingCellError
from twsbench.core.parallel import derive_seed, run_jobs
from twsbench.features.assemble import SupervisedSet, SupervisedSplit
from twsbench.models.classical.grid_search import GridSearchResult, GridSearchSpec, grid_search
from twsbench.models.classical.linear import LinearModel, fit_linear_glob, fit_linear_single
from twsbench.models.classical.storage import save_model
from twsbench.models.neural.storage import save_checkpoint, save_history
from twsbench.models.neural.training import TrainConfig, TrainingResult, train_model


def _rows_by_basin(split: SupervisedSplit) -> Dict[str, np.ndarray]:
    ids = split.basin_ids.astype(str)
    return {b: ids == b for b in sorted(set(ids.tolist()))}


@dataclass
class LinearSingleFit:
    """One OLS model per (lead, basin); leads without a model predict NaN."""

    name: str
    models: Dict[int, Dict[str, LinearModel]]
    trained: bool = True

    def predict_split(self, split: SupervisedSplit) -> np.ndarray:
        flat = split.flat
        out = np.full((len(split), split.targets.shape[1]), np.nan)
        for basin_id, rows in _rows_by_basin(split).items():
            for lead, by_basin in self.models.items():
                if basin_id not in by_basin:
                    raise MissingCellError(f"{self.name} has no model for basin {basin_id}")
                out[rows, lead] = by_basin[basin_id].predict(flat[rows])
        return out

    def basin_models(self, lead: int = 0) -> Dict[str, LinearModel]:
        return self.models[lead]


@dataclass
class LinearGlobFit:
    """One pooled OLS model per lead."""

    name: str
    models: Dict[int, LinearModel]
    trained: bool = True

    def predict_split(self, split: SupervisedSplit) -> np.ndarray:
        flat = split.flat
        out = np.full((len(split), split.targets.shape[1]), np.nan)
        for lead, model in self.models.items():
            out[:, lead] = model.predict(flat)
        return out


@dataclass
class TreeFit:
    """Per-basin grid-searched tree ensembles (single lead)."""

    name: str
    results: Dict[str, GridSearchResult]
    trained: bool = True

    def predict_split(self, split: SupervisedSplit) -> np.ndarray:
        flat = split.flat
        out = np.zeros((len(split), 1))
        for basin_id, rows in _rows_by_basin(split).items():
            if basin_id not in self.results:
                raise MissingCellError(f"{self.name} has no model for basin {basin_id}")
            out[rows, 0] = self.results[basin_id].model.predict(flat[rows])
        return out

    def best_params(self) -> Dict[str, Dict[str, Any]]:
        return {b: r.best_params for b, r in self.results.items()}


@dataclass
class NeuralFit:
    name: str
    result: TrainingResult
    trained: bool = True
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def model(self):
        return self.result.model

    def predict_split(self, split: SupervisedSplit) -> np.ndarray:
        return self.model.predict_split(split)

    def attention(self, sequence: np.ndarray, static: np.ndarray) -> np.ndarray:
        return self.model.attention(sequence, static)


def _training_rows(sset: SupervisedSet) -> SupervisedSplit:
    return sset["train"]


def _leads(sset: SupervisedSet, leads: Optional[Sequence[int]]) -> List[int]:
    return list(range(sset.task.horizon)) if leads is None else sorted(leads)


def fit_linear_single_model(
    sset: SupervisedSet, name: str, workers: int = 1, leads: Optional[Sequence[int]] = None
) -> LinearSingleFit:
    """Direct strategy: one per-basin model for every lead (0-based) in `leads`, all by default."""
    train = _training_rows(sset)
    flat = train.flat
    models = {}
    for lead in _leads(sset, leads):
        sets = {b: (flat[rows], train.targets[rows, lead]) for b, rows in _rows_by_basin(train).items()}
        models[lead] = fit_linear_single(sets, sset.feature_names, workers=workers)
    logger.success(f"Fitted {name}: {len(next(iter(models.values())))} basins x {len(models)} lead(s)")
    return LinearSingleFit(name=name, models=models)


def fit_linear_glob_model(sset: SupervisedSet, name: str, leads: Optional[Sequence[int]] = None) -> LinearGlobFit:
    train = _training_rows(sset)
    models = {
        lead: fit_linear_glob(train.flat, train.targets[:, lead], sset.feature_names)
        for lead in _leads(sset, leads)
    }
    logger.success(f"Fitted {name} on {len(train)} pooled rows")
    return LinearGlobFit(name=name, models=models)


def _grid_search_basin(payload) -> GridSearchResult:
    basin_id, family, spec, X, y, seed = payload
    try:
        return grid_search(family, spec, X, y, seed=seed)
    except Exception as e:
        raise FitError(basin_id, e) from e


def fit_tree_model(
    sset: SupervisedSet,
    name: str,
    family: str,
    spec: GridSearchSpec,
    seed: int = 0,
    workers: int = 1,
) -> TreeFit:
    """Per-basin grid search on the lead-1 target."""
    train = _training_rows(sset)
    flat = train.flat
    jobs: List[Tuple[str, Any]] = [
        (b, (b, family, spec, flat[rows], train.targets[rows, 0], derive_seed(seed, family, b)))
        for b, rows in _rows_by_basin(train).items()
    ]
    logger.info(f"Grid search {name}: {spec.size} candidates x {len(jobs)} basins")
    results = run_jobs(_grid_search_basin, jobs, workers=workers, desc=name)
    logger.success(f"Fitted {name} for {len(results)} basins")
    return TreeFit(name=name, results=results)


def _train_neural(payload) -> TrainingResult:
    kind, sset, config = payload
    return train_model(kind, sset, config)


def fit_neural_models(
    sset: SupervisedSet,
    specs: Dict[str, Tuple[str, TrainConfig]],
    workers: int = 1,
) -> Dict[str, NeuralFit]:
    """
    Train independent global models, possibly in parallel.

    Args:
        sset: Supervised set with train and validation splits
        specs: Report name -> (kind, TrainConfig)
        workers: Process count
    """
    jobs = [(name, (kind, sset, config)) for name, (kind, config) in sorted(specs.items())]
    results = run_jobs(_train_neural, jobs, workers=workers, desc="neural")
    return {name: NeuralFit(name=name, result=result) for name, result in results.items()}


def predict_physical(fit: Any, sset: SupervisedSet, split_name: str = "test") -> np.ndarray:
    """Test predictions (n, H) converted back to mm."""
    split = sset[split_name]
    return sset.inverse_targets(split, fit.predict_split(split))


def save_fits(fits: Dict[str, Any], base_dir: Union[str, Path], suffix: str = "") -> List[Path]:
    """
    Persist fitted models under base_dir/<model><suffix>/.

    Classical models are JSON dumps (one per basin and lead); neural models are
    a checkpoint plus the training history.

    Returns:
        Paths written
    """
    written = []
    for name, fit in sorted(fits.items()):
        target = Path(base_dir) / f"{name}{suffix}"
        if isinstance(fit, LinearSingleFit):
            for lead, by_basin in sorted(fit.models.items()):
                for basin_id, model in by_basin.items():
                    written.append(Path(save_model(model, target / f"lead{lead + 1}" / f"{basin_id}.json")))
        elif isinstance(fit, LinearGlobFit):
            for lead, model in sorted(fit.models.items()):
                written.append(Path(save_model(model, target / f"lead{lead + 1}.json")))
        elif isinstance(fit, TreeFit):
            for basin_id, result in fit.results.items():
                written.append(Path(save_model(result.model, target / f"{basin_id}.json")))
        elif isinstance(fit, NeuralFit):
            written.append(save_checkpoint(fit.model, target, "checkpoint"))
            written.append(save_history(fit.result.history, target / "history.csv"))
    return written
