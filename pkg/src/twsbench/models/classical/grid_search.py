"""
Per-basin exhaustive grid search with a chronological holdout.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, model_validator

from twsbench.core.errors import EmptyInputError, InvalidParamsError
from twsbench.models.classical.boosted import fit_boosted
from twsbench.models.classical.forest import fit_forest
from twsbench.models.classical.tree import check_xy
from twsbench.utils.constants import BOOSTED_GRID, HOLDOUT_FRACTION, RF_GRID

Family = Literal["rf", "gbm"]

_FITTERS = {"rf": fit_forest, "gbm": fit_boosted}
_DEFAULT_GRIDS = {"rf": RF_GRID, "gbm": BOOSTED_GRID}

MIN_ROWS = 10


class GridSearchSpec(BaseModel):
    """Parameter name -> candidates, enumerated in key order (last key fastest)."""

    model_config = ConfigDict(extra="forbid")

    grid: Dict[str, List[Any]]
    holdout_fraction: float = HOLDOUT_FRACTION

    @model_validator(mode="after")
    def _check(self) -> "GridSearchSpec":
        if not self.grid:
            raise InvalidParamsError("grid needs at least one parameter")
        for name, values in self.grid.items():
            if not values:
                raise InvalidParamsError(f"grid parameter {name} has no candidates")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise InvalidParamsError("holdout_fraction must lie in (0, 1)")
        return self

    @classmethod
    def for_family(cls, family: Family, **overrides) -> "GridSearchSpec":
        if family not in _DEFAULT_GRIDS:
            raise InvalidParamsError(f"unknown model family {family!r}")
        return cls(grid={k: list(v) for k, v in _DEFAULT_GRIDS[family].items()}, **overrides)

    def candidates(self) -> List[Dict[str, Any]]:
        names = list(self.grid)
        return [dict(zip(names, values)) for values in itertools.product(*self.grid.values())]

    @property
    def size(self) -> int:
        return len(self.candidates())


@dataclass
class GridSearchResult:
    family: str
    best_params: Dict[str, Any]
    best_score: float
    model: Any
    scores: List[Tuple[Dict[str, Any], float]] = field(default_factory=list)

    @property
    def n_candidates(self) -> int:
        return len(self.scores)


def grid_search(
    family: Family,
    spec: GridSearchSpec,
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
) -> GridSearchResult:
    """
    Score every candidate on the chronological tail of the training rows and
    refit the winner on all of them.

    Args:
        family: "rf" or "gbm"
        spec: Candidate grid and holdout fraction
        X, y: Training rows in time order
        seed: Passed to every fit

    Returns:
        GridSearchResult; ties on holdout MAE go to the earlier candidate
    """
    if family not in _FITTERS:
        raise InvalidParamsError(f"unknown model family {family!r}")
    X, y = check_xy(X, y)
    n = X.shape[0]
    if n < MIN_ROWS:
        raise EmptyInputError(f"grid search needs at least {MIN_ROWS} training rows, got {n}")

    n_hold = max(1, int(round(n * spec.holdout_fraction)))
    split = n - n_hold
    fitter = _FITTERS[family]

    scores = []
    best_params, best_score = None, np.inf
    for params in spec.candidates():
        model = fitter(X[:split], y[:split], seed=seed, **params)
        score = float(np.mean(np.abs(model.predict(X[split:]) - y[split:])))
        scores.append((params, score))
        if score < best_score:
            best_params, best_score = params, score

    logger.debug(f"grid search [{family}]: {len(scores)} candidates, best MAE {best_score:.4g} at {best_params}")
    model = fitter(X, y, seed=seed, **best_params)
    return GridSearchResult(
        family=family,
        best_params=dict(best_params),
        best_score=best_score,
        model=model,
        scores=scores,
    )
