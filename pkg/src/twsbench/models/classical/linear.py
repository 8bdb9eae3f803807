"""
Ordinary least squares via column-pivoted QR, per basin (Linear_single) and
pooled across basins (Linear_glob).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import qr, solve_triangular

from twsbench.core.errors import EmptyInputError, FitError, NonFiniteInputError
from twsbench.core.parallel import run_jobs
from twsbench.utils.constants import PIVOT_TOLERANCE


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    fitted_on: str = "global"
    dropped_columns: List[int] = field(default_factory=list)
    feature_names: Optional[List[str]] = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept

    def coefficients(self) -> Dict[str, float]:
        names = self.feature_names or [f"x{i}" for i in range(self.weights.shape[0])]
        return {name: float(w) for name, w in zip(names, self.weights)}


def _check_design(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError(f"design matrix needs at least one row, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise EmptyInputError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInputError("design matrix or targets contain NaN/inf")
    return X, y


def fit_ols(
    X: np.ndarray,
    y: np.ndarray,
    fitted_on: str = "global",
    feature_names: Optional[List[str]] = None,
    tolerance: float = PIVOT_TOLERANCE,
) -> LinearModel:
    """
    Least-squares fit with an internal intercept column.

    Columns whose pivot |R_kk| falls below tolerance * |R_00| are dropped and
    keep weight 0; the dropped feature indices are recorded on the model.
    """
    X, y = _check_design(X, y)
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])

    Q, R, perm = qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tolerance * diag[0])) if diag.size and diag[0] > 0 else 0

    coef = np.zeros(p + 1)
    if rank:
        z = solve_triangular(R[:rank, :rank], Q[:, :rank].T @ y)
        coef[perm[:rank]] = z

    dropped = sorted(int(c) - 1 for c in perm[rank:] if c != 0)
    if dropped:
        logger.debug(f"OLS [{fitted_on}]: rank {rank}/{p + 1}, dropped {len(dropped)} column(s)")

    return LinearModel(
        weights=coef[1:],
        intercept=float(coef[0]),
        fitted_on=fitted_on,
        dropped_columns=dropped,
        feature_names=list(feature_names) if feature_names is not None else None,
    )


def _fit_basin(payload) -> LinearModel:
    basin_id, X, y, feature_names = payload
    try:
        return fit_ols(X, y, fitted_on=basin_id, feature_names=feature_names)
    except Exception as e:
        raise FitError(basin_id, e) from e


def fit_linear_single(
    sets: Dict[str, Tuple[np.ndarray, np.ndarray]],
    feature_names: Optional[List[str]] = None,
    workers: int = 1,
) -> Dict[str, LinearModel]:
    """
    One OLS model per basin.

    Args:
        sets: basin_id -> (X, y) training rows
        feature_names: Flat feature manifest
        workers: Process count

    Returns:
        basin_id -> LinearModel, ordered by basin_id
    """
    jobs = []
    for basin_id, (X, y) in sorted(sets.items()):
        rows, cols = np.shape(X)
        if rows < cols + 5:
            logger.warning(f"basin {basin_id}: {rows} rows for {cols} features; relying on rank handling")
        jobs.append((basin_id, (basin_id, X, y, feature_names)))
    return run_jobs(_fit_basin, jobs, workers=workers, desc="Linear_single")


def fit_linear_glob(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Optional[List[str]] = None,
) -> LinearModel:
    """One OLS model on the concatenation of all basins' standardized rows."""
    return fit_ols(X, y, fitted_on="global", feature_names=feature_names)
