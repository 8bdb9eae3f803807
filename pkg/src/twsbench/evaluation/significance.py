"""
Two-sample Mann-Whitney U test.

Exact p-values by enumerating every labeling of the pooled midranks when
both samples have at most 8 values; tie-corrected normal approximation with
continuity correction otherwise.
"""

import itertools
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from twsbench.core.errors import EmptySampleError, InvalidParamsError
from twsbench.utils.constants import EXACT_MWU_MAX

Alternative = Literal["two-sided", "less", "greater"]
ALTERNATIVES = ("two-sided", "less", "greater")

_EPS = 1e-9


@dataclass(frozen=True)
class SignificanceResult:
    U: float
    p: float
    alternative: str
    method: str
    n_a: int
    n_b: int

    def significant(self, level: float = 0.05) -> bool:
        return self.p < level


def _exact_tails(ranks: np.ndarray, n: int, u_obs: float):
    total = ranks.size
    combos = np.array(list(itertools.combinations(range(total), n)), dtype=np.int64)
    u = ranks[combos].sum(axis=1) - n * (n + 1) / 2.0
    p_less = float(np.mean(u <= u_obs + _EPS))
    p_greater = float(np.mean(u >= u_obs - _EPS))
    return p_less, p_greater


def _normal_tails(ranks: np.ndarray, n: int, m: int, u_obs: float):
    total = n + m
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = np.sum(counts**3 - counts) / (total * (total - 1))
    var = n * m / 12.0 * ((total + 1) - tie_term)
    if var <= 0:
        return 1.0, 1.0
    sd = np.sqrt(var)
    mu = n * m / 2.0
    p_less = float(norm.cdf((u_obs - mu + 0.5) / sd))
    p_greater = float(norm.sf((u_obs - mu - 0.5) / sd))
    return p_less, p_greater


def mann_whitney_u(
    a: Sequence[float],
    b: Sequence[float],
    alternative: Alternative = "two-sided",
    method: Literal["auto", "exact", "normal-approx"] = "auto",
) -> SignificanceResult:
    """
    Test whether sample a tends to be smaller ("less") or larger ("greater")
    than sample b, or differs in either direction.

    Args:
        method: "auto" picks exact enumeration for small samples

    Returns:
        SignificanceResult with U computed for sample a
    """
    if alternative not in ALTERNATIVES:
        raise InvalidParamsError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise EmptySampleError(f"both samples must be nonempty, got {a.size} and {b.size}")

    n, m = a.size, b.size
    ranks = rankdata(np.concatenate([a, b]), method="average")
    u_obs = float(ranks[:n].sum() - n * (n + 1) / 2.0)

    if method == "auto":
        method = "exact" if n <= EXACT_MWU_MAX and m <= EXACT_MWU_MAX else "normal-approx"
    if method == "exact":
        p_less, p_greater = _exact_tails(ranks, n, u_obs)
    elif method == "normal-approx":
        p_less, p_greater = _normal_tails(ranks, n, m, u_obs)
    else:
        raise InvalidParamsError(f"unknown method {method!r}")

    if alternative == "less":
        p = p_less
    elif alternative == "greater":
        p = p_greater
    else:
        p = min(1.0, 2.0 * min(p_less, p_greater))

    return SignificanceResult(
        U=u_obs,
        p=float(np.clip(p, 0.0, 1.0)),
        alternative=alternative,
        method=method,
        n_a=n,
        n_b=m,
    )
