"""Selection and estimation error for one (estimate, truth) pair, plus
closed-form false-positive laws for threshold estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from .core import DomainError, SelectionDiagnostics, as_vector, std_normal_cdf

__all__ = [
    "diagnose",
    "BinomialFP",
    "binomial_fp_oracle",
    "fixed_threshold_any_fp_probability",
    "LogLogFit",
    "fdr_rate_exponent",
    "binomial_gof",
]


def diagnose(estimate: ArrayLike, truth: ArrayLike) -> SelectionDiagnostics:
    est = as_vector(estimate, "estimate")
    tru = as_vector(truth, "truth")
    if est.size != tru.size:
        raise DomainError(f"length mismatch: estimate {est.size}, truth {tru.size}")
    sel = est != 0.0
    act = tru != 0.0
    fp = int(np.count_nonzero(sel & ~act))
    tp = int(np.count_nonzero(sel & act))
    fn = int(np.count_nonzero(~sel & act))
    fdp = fp / (fp + tp) if fp + tp else 0.0
    diff = est - tru
    return SelectionDiagnostics(
        fp=fp,
        tp=tp,
        fn_count=fn,
        fdp=fdp,
        l2_sq=float(diff @ diff),
        symdiff_ratio=(fp + fn) / max(1, int(np.count_nonzero(act))),
    )


@dataclass(frozen=True)
class BinomialFP:
    trial_count: int
    success_prob: float
    mean_fp: float

    def pmf(self, k):
        return stats.binom.pmf(k, self.trial_count, self.success_prob)


def binomial_fp_oracle(n: int, s: int, gamma: float) -> BinomialFP:
    """False-positive law of the inclusive hard threshold at level gamma*log(n/s).

    FP ~ Bin(n - s, 2 * Phi(-sqrt(gamma * log(n / s)))).
    """
    if not 0 <= s < n:
        raise DomainError(f"need 0 <= s < n, got s={s}, n={n}")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if s == 0:
        raise DomainError("s = 0 makes the threshold level log(n/s) infinite")
    prob = 2.0 * std_normal_cdf(-math.sqrt(gamma * math.log(n / s)))
    return BinomialFP(n - s, prob, (n - s) * prob)


def fixed_threshold_any_fp_probability(nulls: int, t: float) -> float:
    """P(FP > 0) for the strict threshold |y| > t over ``nulls`` null coordinates."""
    tail = 2.0 * std_normal_cdf(-t)
    # 1 - (1 - a)^m without cancellation
    return -math.expm1(nulls * math.log1p(-tail))


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int


def fdr_rate_exponent(points: Iterable[tuple[float, float]]) -> LogLogFit:
    """OLS of log(fdr) on log(ratio).

    ``points`` are ``(sparsity_ratio, fdr_estimate)`` pairs; every ratio must
    lie in (0, 1) and every fdr must be strictly positive.
    """
    pts = [(float(r), float(f)) for r, f in points]
    if len(pts) < 3:
        raise DomainError(f"need at least 3 points for a log-log fit, got {len(pts)}")
    r = np.array([p[0] for p in pts])
    f = np.array([p[1] for p in pts])
    if np.any((r <= 0) | (r >= 1)):
        raise DomainError("sparsity ratios must lie in (0, 1)")
    if np.any(f <= 0):
        raise DomainError("fdr estimates must be positive; drop or floor zero points first")
    x, y = np.log(r), np.log(f)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DomainError("all sparsity ratios are equal; slope undefined")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    syy = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if syy == 0.0 else max(0.0, 1.0 - float(resid @ resid) / syy)
    return LogLogFit(slope, intercept, min(r2, 1.0), len(pts))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    critical_value: float
    bins: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value


def binomial_gof(counts: Sequence[int], trials: int, prob: float,
                 level: float = 0.999, min_expected: float = 5.0) -> GofResult:
    """Pearson chi-square test of observed counts against Bin(trials, prob).

    Adjacent outcomes are pooled from both ends until every bin expects at
    least ``min_expected`` observations; the two tails are open-ended.
    """
    obs = np.asarray(counts, dtype=np.int64)
    m = obs.size
    pmf = stats.binom.pmf(np.arange(trials + 1), trials, prob)
    edges = []
    lo = 0
    acc = 0.0
    for k in range(trials + 1):
        acc += pmf[k] * m
        if acc >= min_expected:
            edges.append(k)
            acc = 0.0
    if not edges:
        raise DomainError("too few observations for any bin to reach the expected count")
    # merge an underfilled last bin into its neighbour
    if acc > 0.0 and len(edges) > 1:
        edges.pop()
    edges[-1] = trials
    expected = []
    observed = []
    for hi in edges:
        sel = (obs >= lo) & (obs <= hi)
        observed.append(int(sel.sum()))
        expected.append(float(pmf[lo: hi + 1].sum()) * m)
        lo = hi + 1
    observed = np.array(observed, dtype=np.float64)
    expected = np.array(expected)
    stat = float(((observed - expected) ** 2 / expected).sum())
    dof = max(1, len(edges) - 1)
    return GofResult(stat, dof, float(stats.chi2.ppf(level, dof)), len(edges))
