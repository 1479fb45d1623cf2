"""Gaussian-design regression: instance generation, RSS scoring and the
log-factorial penalised subset estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import (
    BudgetError,
    DomainError,
    LogFactorialPenalty,
    SingularDesignError,
    as_vector,
)

__all__ = [
    "ModelScore",
    "SearchMethod",
    "DEFAULT_GUARD_LIMIT",
    "gaussian_design",
    "rss",
    "subset_count",
    "solve_regression_penalized",
    "worst_case_beta",
]

DEFAULT_GUARD_LIMIT = 2_000_000
# a column whose residual norm falls below this fraction of its own norm is
# treated as lying in the span of the current model
RANK_TOL = 1e-10


@dataclass(frozen=True)
class ModelScore:
    subset: tuple[int, ...]
    rss: float
    penalty_value: float
    sc: float
    heuristic: bool = False

    def key(self):
        """Ordering used for argmin: criterion, then size, then lexicographic."""
        return (self.sc, len(self.subset), self.subset)


@dataclass(frozen=True)
class SearchMethod:
    kind: str = "exhaustive"
    guard_limit: int = DEFAULT_GUARD_LIMIT

    def __post_init__(self):
        kind = {"greedy": "greedy_forward"}.get(self.kind, self.kind)
        if kind not in ("exhaustive", "greedy_forward"):
            raise DomainError(f"unknown search method {self.kind!r}")
        if self.guard_limit < 1:
            raise DomainError(f"guard_limit must be positive, got {self.guard_limit}")
        object.__setattr__(self, "kind", kind)


def gaussian_design(n: int, p: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """n x p matrix of iid standard normal entries."""
    if n < 1 or p < 1:
        raise DomainError(f"design dimensions must be positive, got {n}x{p}")
    return rng.standard_normal((n, p))


def rss(X: ArrayLike, y: ArrayLike, subset: Sequence[int]) -> float:
    """Residual sum of squares of ``y`` after projecting off ``X[:, subset]``.

    Uses a thin QR factorisation rather than the normal equations.
    """
    X = np.asarray(X, dtype=np.float64)
    y = as_vector(y, "y")
    idx = [int(j) for j in subset]
    if len(set(idx)) != len(idx):
        raise DomainError(f"subset has repeated indices: {idx}")
    if any(j < 0 or j >= X.shape[1] for j in idx):
        raise DomainError(f"subset indices out of range for {X.shape[1]} columns: {idx}")
    if not idx:
        return float(y @ y)
    if len(idx) > X.shape[0]:
        raise SingularDesignError(idx)
    Xs = X[:, idx]
    Q, R = np.linalg.qr(Xs)
    diag = np.abs(np.diag(R))
    if np.any(diag <= RANK_TOL * np.linalg.norm(Xs, axis=0)):
        raise SingularDesignError(idx)
    r = y - Q @ (Q.T @ y)
    return float(r @ r)


def subset_count(p: int, k_max: int) -> int:
    return sum(math.comb(p, k) for k in range(k_max + 1))


def _check(X, y, penalty):
    X = np.asarray(X, dtype=np.float64)
    y = as_vector(y, "y")
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DomainError(f"X shape {X.shape} incompatible with y of length {y.size}")
    n, p = X.shape
    if penalty.p_ambient != p:
        raise DomainError(f"penalty.p_ambient={penalty.p_ambient} must equal p={p}")
    if penalty.p_tilde > min(n, p):
        raise DomainError(f"p_tilde={penalty.p_tilde} exceeds min(n, p)={min(n, p)}")
    return X, y


def _exhaustive(X, y, pe) -> ModelScore:
    """Depth-first enumeration of all subsets of size <= len(pe) - 1.

    Each child extends its parent's orthonormal basis by one Gram-Schmidt
    step (with one re-orthogonalisation), and carries the residual vector.
    """
    n, p = X.shape
    k_max = len(pe) - 1
    norms = np.linalg.norm(X, axis=0)
    best = ModelScore((), float(y @ y), 0.0, float(y @ y))
    best_key = best.key()
    Q = np.empty((n, k_max))

    def visit(subset, start, resid):
        nonlocal best, best_key
        k = len(subset)
        for j in range(start, p):
            v = X[:, j].copy()
            for _ in range(2):
                v -= Q[:, :k] @ (Q[:, :k].T @ v)
            vn = math.sqrt(v @ v)
            child = subset + (j,)
            if vn <= RANK_TOL * norms[j]:
                raise SingularDesignError(child)
            q = v / vn
            r = resid - (q @ resid) * q
            val = float(r @ r)
            cand = ModelScore(child, val, float(pe[k + 1]), val + float(pe[k + 1]))
            if cand.key() < best_key:
                best, best_key = cand, cand.key()
            if k + 1 < k_max:
                Q[:, k] = q
                visit(child, j + 1, r)

    if k_max > 0:
        visit((), 0, y.copy())
    return best


def _greedy_forward(X, y, pe) -> ModelScore:
    n, p = X.shape
    k_max = len(pe) - 1
    norms = np.linalg.norm(X, axis=0)
    V = X.copy()  # columns residualised against the current model
    r = y.copy()
    active = np.zeros(p, dtype=bool)
    path = []
    best = ModelScore((), float(y @ y), 0.0, float(y @ y), heuristic=True)
    for k in range(k_max):
        vn2 = np.einsum("ij,ij->j", V, V)
        ok = ~active & (np.sqrt(vn2) > RANK_TOL * norms)
        if not ok.any():
            break
        drop = np.where(ok, (V.T @ r) ** 2 / np.where(ok, vn2, 1.0), -np.inf)
        j = int(np.argmax(drop))
        q = V[:, j] / math.sqrt(vn2[j])
        r = r - (q @ r) * q
        V -= np.outer(q, q @ V)
        active[j] = True
        path.append(j)
        val = float(r @ r)
        cand = ModelScore(tuple(sorted(path)), val, float(pe[k + 1]), val + float(pe[k + 1]), True)
        if cand.key() < best.key():
            best = cand
    return best


def solve_regression_penalized(
    X: ArrayLike,
    y: ArrayLike,
    penalty: LogFactorialPenalty,
    method: SearchMethod | None = None,
) -> tuple[NDArray[np.float64], ModelScore]:
    """Minimise ``RSS(S) + pe(|S|)`` over subsets ``|S| <= p_tilde``.

    Returns the least-squares fit on the selected subset (zero elsewhere)
    and its score. ``greedy_forward`` returns the best prefix of the
    forward-selection path and flags the score as heuristic.

    Raises
    ------
    BudgetError
        Exhaustive search would score more than ``method.guard_limit`` subsets.
    SingularDesignError
        A scored subset is rank deficient.
    """
    method = method or SearchMethod()
    X, y = _check(X, y, penalty)
    pe = penalty.cumulative()
    if method.kind == "exhaustive":
        need = subset_count(X.shape[1], penalty.p_tilde)
        if need > method.guard_limit:
            raise BudgetError(need, method.guard_limit)
        score = _exhaustive(X, y, pe)
    else:
        score = _greedy_forward(X, y, pe)
    beta = np.zeros(X.shape[1])
    if score.subset:
        cols = list(score.subset)
        coef, *_ = np.linalg.lstsq(X[:, cols], y, rcond=None)
        beta[cols] = coef
    return beta, score


def worst_case_beta(
    p: int,
    s: int,
    c: float,
    n: int | None = None,
    rng: np.random.Generator | None = None,
) -> NDArray[np.float64]:
    """Equal positive spikes on a uniformly random s-subset.

    Magnitude is ``sqrt(c log(p/s))`` (means scale, ``n`` omitted) or
    ``sqrt(c log(p/s) / n)`` (regression scale).
    """
    if not 1 <= s <= p:
        raise DomainError(f"need 1 <= s <= p, got s={s}, p={p}")
    if s == p:
        raise DomainError("s == p gives log(p/s) = 0: spike magnitude would be zero")
    if not c > 0:
        raise DomainError(f"signal multiplier c must be positive, got {c}")
    if rng is None:
        raise DomainError("worst_case_beta needs an explicit generator")
    height = c * math.log(p / s)
    if n is not None:
        height /= n
    beta = np.zeros(p)
    beta[rng.choice(p, size=s, replace=False)] = math.sqrt(height)
    return beta

