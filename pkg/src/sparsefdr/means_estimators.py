"""Estimators for the sparse normal means model y = beta + eps.

Every estimator is a deterministic map from an observation vector to a
:class:`MeansEstimate`. Whenever coordinates are ranked, the order is
``|y|`` descending with ties broken by ascending index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import ConfigError, DomainError, LogFactorialPenalty, as_vector, std_normal_quantile

__all__ = [
    "MeansEstimate",
    "magnitude_order",
    "hard_threshold",
    "fixed_threshold",
    "no_false_positive_threshold",
    "solve_means_log_factorial",
    "log_factorial_profile",
    "bh_stepup",
    "bh_profile",
    "counterexample_estimate",
    "top_s_oracle",
    "ESTIMATORS",
    "make_estimator",
]


@dataclass(frozen=True)
class MeansEstimate:
    beta_hat: NDArray[np.float64]
    selected_k: int
    objective_value: float | None = None

    @property
    def support(self) -> NDArray[np.intp]:
        return np.flatnonzero(self.beta_hat != 0.0)


def magnitude_order(y: NDArray[np.float64]) -> NDArray[np.intp]:
    """Indices sorting ``|y|`` descending, ties by ascending index."""
    return np.argsort(-np.abs(y), kind="stable")


def _keep(y: NDArray[np.float64], mask: NDArray[np.bool_], objective=None) -> MeansEstimate:
    beta = np.where(mask, y, 0.0)
    return MeansEstimate(beta, int(np.count_nonzero(beta)), objective)


def _keep_top(y: NDArray[np.float64], order: NDArray[np.intp], k: int, objective=None):
    beta = np.zeros_like(y)
    top = order[:k]
    beta[top] = y[top]
    return MeansEstimate(beta, int(np.count_nonzero(beta)), objective)


def hard_threshold(y: ArrayLike, gamma: float, s: int) -> MeansEstimate:
    """Keep ``y_i`` iff ``y_i**2 >= gamma * log(n / s)`` (inclusive)."""
    y = as_vector(y, "y")
    n = y.size
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if not 1 <= s < n:
        raise DomainError(f"need 1 <= s < n for a positive threshold, got s={s}, n={n}")
    level = gamma * math.log(n / s)
    return _keep(y, y * y >= level)


def fixed_threshold(y: ArrayLike, t: float) -> MeansEstimate:
    """Keep ``y_i`` iff ``|y_i| > t`` (strict)."""
    y = as_vector(y, "y")
    if not t > 0:
        raise DomainError(f"threshold must be positive, got {t}")
    return _keep(y, np.abs(y) > t)


def no_false_positive_threshold(n: int, s: int) -> float:
    """sqrt(2 log(n - s)), the smallest threshold that rules out false positives."""
    if not 0 <= s < n - 1:
        raise DomainError(f"need n - s >= 2, got n={n}, s={s}")
    return math.sqrt(2.0 * math.log(n - s))


def log_factorial_profile(y: ArrayLike, penalty: LogFactorialPenalty):
    """Return ``(order, S')`` where ``S'[k]`` is the criterion for the top-k model.

    ``S'(k) = sum_{l>k} y_(l)^2 + gamma * sum_{i<=k} log(p/i)`` for
    k = 0..p_tilde.
    """
    y = as_vector(y, "y")
    n = y.size
    if penalty.p_ambient != n:
        raise DomainError(f"penalty.p_ambient={penalty.p_ambient} must equal n={n}")
    order = magnitude_order(y)
    sq = y[order] ** 2
    # suffix sums: tail[k] = sum of sq[k:]
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    crit = tail[: penalty.p_tilde + 1] + penalty.cumulative()
    return order, crit


def solve_means_log_factorial(y: ArrayLike, penalty: LogFactorialPenalty) -> MeansEstimate:
    """Log-factorial L0 penalised estimator for the means model.

    The minimiser keeps the top-``k`` coordinates by magnitude, where ``k``
    is the global minimiser of ``S'`` on ``[0, p_tilde]``; the smallest
    such ``k`` wins ties. O(n log n).
    """
    y = as_vector(y, "y")
    if penalty.p_tilde > y.size:
        raise DomainError(f"p_tilde={penalty.p_tilde} exceeds n={y.size}")
    order, crit = log_factorial_profile(y, penalty)
    k = int(np.argmin(crit))
    return _keep_top(y, order, k, float(crit[k]))


def bh_profile(y: ArrayLike, q: float):
    """Return ``(order, S)`` for the step-up BH criterion, k = 0..n."""
    y = as_vector(y, "y")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    n = y.size
    order = magnitude_order(y)
    sq = y[order] ** 2
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    l = np.arange(1, n + 1, dtype=np.float64)
    # Phi^{-1}(1 - a) = -Phi^{-1}(a); the lower tail keeps precision for tiny a
    z = std_normal_quantile(q * l / (2.0 * n))
    pen = np.concatenate([[0.0], np.cumsum(z * z)])
    return order, tail + pen


def bh_stepup(y: ArrayLike, q: float) -> MeansEstimate:
    """Step-up Benjamini-Hochberg estimator in penalised form.

    ``k_hat`` is the rightmost weak local minimum of ``S`` with
    ``S(-1) = S(n+1) = +inf``; the top-``k_hat`` coordinates are kept.
    """
    order, crit = bh_profile(y, q)
    y = as_vector(y, "y")
    padded = np.concatenate([[np.inf], crit, [np.inf]])
    is_min = (padded[1:-1] <= padded[:-2]) & (padded[1:-1] <= padded[2:])
    k = int(np.flatnonzero(is_min)[-1])
    return _keep_top(y, order, k, float(crit[k]))


def counterexample_estimate(y: ArrayLike, gamma: float) -> MeansEstimate:
    """Non-monotone selection-consistent estimator.

    Minimises ``||y - b||^2 + gamma * pe(#{j : b_j != 0, b_j^2 < gamma log n})``
    with ``pe(k) = sum_{i<=k} log(n/i)``, over the candidate grid
    ``b_j in {0, y_j}``.

    Only nonzero coordinates enter the count: counting zeros as well would
    make the penalty constant over the candidates that matter and could
    never drop the small coordinate of the classic example. Coordinates at
    or above the level are kept for free; among the rest, a prefix by
    ``y^2`` descending is kept, its length minimising the dropped mass plus
    penalty (smallest length on ties).
    """
    y = as_vector(y, "y")
    n = y.size
    if n < 2:
        raise DomainError("counterexample estimator needs n >= 2")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    level = gamma * math.log(n)
    sq = y * y
    strong = sq >= level
    weak = np.flatnonzero(~strong & (sq > 0.0))
    weak = weak[np.argsort(-sq[weak], kind="stable")]
    wsq = sq[weak]
    m = weak.size
    dropped = np.concatenate([np.cumsum(wsq[::-1])[::-1], [0.0]])
    i = np.arange(1, m + 1, dtype=np.float64)
    pen = gamma * np.concatenate([[0.0], np.cumsum(np.log(n / i))])
    cost = dropped + pen
    k = int(np.argmin(cost))
    mask = strong.copy()
    mask[weak[:k]] = True
    return _keep(y, mask, float(cost[k]))


def top_s_oracle(y: ArrayLike, s_star: int) -> MeansEstimate:
    """Keep the ``s_star`` largest coordinates in magnitude."""
    y = as_vector(y, "y")
    if not 1 <= s_star <= y.size:
        raise DomainError(f"s_star must lie in [1, {y.size}], got {s_star}")
    return _keep_top(y, magnitude_order(y), s_star)


def _log_factorial(y, gamma, p_tilde=None):
    y = as_vector(y, "y")
    n = y.size
    pen = LogFactorialPenalty(gamma, n, n if p_tilde is None else min(int(p_tilde), n))
    return solve_means_log_factorial(y, pen)


# name -> (callable, required params, optional params)
ESTIMATORS: dict[str, tuple[Callable[..., MeansEstimate], tuple[str, ...], tuple[str, ...]]] = {
    "hard_threshold": (hard_threshold, ("gamma", "s"), ()),
    "fixed_threshold": (fixed_threshold, ("t",), ()),
    "log_factorial": (_log_factorial, ("gamma",), ("p_tilde",)),
    "bh_stepup": (bh_stepup, ("q",), ()),
    "counterexample": (counterexample_estimate, ("gamma",), ()),
    "top_s_oracle": (top_s_oracle, ("s_star",), ()),
}

_ALIASES = {
    "hard-threshold": "hard_threshold",
    "fixed-threshold": "fixed_threshold",
    "log-factorial": "log_factorial",
    "solve_means_log_factorial": "log_factorial",
    "bh": "bh_stepup",
    "bh-stepup": "bh_stepup",
    "counterexample_estimate": "counterexample",
    "top-s-oracle": "top_s_oracle",
    "top_s": "top_s_oracle",
}


def canonical_name(name: str) -> str:
    key = _ALIASES.get(name, name)
    if key not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}; known: {sorted(ESTIMATORS)}", "estimator")
    return key


def make_estimator(name: str, **params) -> Callable[[NDArray[np.float64]], MeansEstimate]:
    """Close a named estimator over its parameters.

    Unknown names, missing required parameters and unexpected parameters
    all raise :class:`ConfigError`.
    """
    key = canonical_name(name)
    fn, required, optional = ESTIMATORS[key]
    params = {k: v for k, v in params.items() if v is not None}
    missing = [p for p in required if p not in params]
    if missing:
        raise ConfigError(f"{key} requires parameters {missing}", "estimator")
    extra = sorted(set(params) - set(required) - set(optional))
    if extra:
        raise ConfigError(f"{key} does not accept parameters {extra}", "estimator")

    def estimator(y):
        return fn(y, **params)

    estimator.__name__ = key
    estimator.params = dict(params)
    return estimator
