"""Majorisation and a randomised monotonicity audit for means estimators.

An estimator is monotone when ``y`` majorising ``z`` forces ``b(y)`` to
majorise ``b(z)``; in particular the support of ``b(z)`` must then be
contained in the support of ``b(y)``. The audit searches for pairs that
break either property. It can exhibit a violation, never prove absence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import ConfigError, DomainError, as_vector, seeded_substream
from .means_estimators import MeansEstimate, make_estimator

__all__ = [
    "majorizes",
    "sample_majorizing_pair",
    "nonmonotone_pair",
    "MonotoneReport",
    "audit_monotonicity",
    "format_counterexample",
]


def majorizes(y: ArrayLike, z: ArrayLike) -> bool:
    """True iff sign(y_i) sign(z_i) >= 0 and |y_i| >= |z_i| for every i."""
    y = as_vector(y, "y")
    z = as_vector(z, "z")
    if y.size != z.size:
        raise DomainError(f"length mismatch: {y.size} vs {z.size}")
    return bool(np.all(np.sign(y) * np.sign(z) >= 0) and np.all(np.abs(y) >= np.abs(z)))


def sample_majorizing_pair(
    base_truth: ArrayLike,
    rng: np.random.Generator,
    inflate_prob: float = 0.5,
    inflate_scale: float = 0.5,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Draw ``z = base_truth + N(0, I)`` and ``y = z * f`` with factors ``f >= 1``.

    Each coordinate is inflated with probability ``inflate_prob`` by
    ``1 + Exp(inflate_scale)``; the rest keep factor exactly 1. Scaling
    never changes a sign, so ``y`` majorises ``z`` by construction.
    """
    base = as_vector(base_truth, "base_truth")
    z = base + rng.standard_normal(base.size)
    grow = rng.random(base.size) < inflate_prob
    factor = 1.0 + np.where(grow, rng.exponential(inflate_scale, base.size), 0.0)
    return z * factor, z


def nonmonotone_pair(n: int, gamma: float):
    """The two-coordinate example on which the counterexample estimator shrinks.

    Returns ``(y_small, y_large)`` with ``y_small = (a1, a2, 0, ...)`` and
    ``y_large = (a1, a3, 0, ...)`` where
    ``a3^2 > gamma log n > a1^2 > a2^2 > gamma (log n + log(n/2)) / 2``.
    ``y_large`` majorises ``y_small``.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    upper = gamma * math.log(n)
    lower = gamma * (math.log(n) + math.log(n / 2.0)) / 2.0
    gap = upper - lower
    a1 = math.sqrt(lower + 2.0 * gap / 3.0)
    a2 = math.sqrt(lower + gap / 3.0)
    a3 = math.sqrt(upper + 1.0)
    small = np.zeros(n)
    large = np.zeros(n)
    small[:2] = a1, a2
    large[:2] = a1, a3
    return small, large


@dataclass
class MonotoneReport:
    estimator: str
    trials: int
    value_violations: int = 0
    selection_violations: int = 0
    first_counterexample: tuple[NDArray, NDArray] | None = None
    first_trial: int | None = None
    first_estimates: tuple[NDArray, NDArray] | None = field(default=None, repr=False)

    @property
    def clean(self) -> bool:
        return self.value_violations == 0 and self.selection_violations == 0

    def summary(self) -> str:
        lines = [
            f"estimator: {self.estimator}",
            f"trials: {self.trials}",
            f"value_violations: {self.value_violations}",
            f"selection_violations: {self.selection_violations}",
        ]
        if self.first_trial is not None:
            lines.append(f"first_counterexample_trial: {self.first_trial}")
        return "\n".join(lines)


def _check_pair(estimator, y, z):
    by = estimator(y).beta_hat
    bz = estimator(z).beta_hat
    value_bad = not majorizes(by, bz)
    selection_bad = bool(np.any((bz != 0.0) & (by == 0.0)))
    return value_bad, selection_bad, by, bz


def _resolve(estimator, params):
    if callable(estimator):
        return getattr(estimator, "__name__", "custom"), estimator
    if not isinstance(estimator, str):
        raise ConfigError(f"estimator must be a name or callable, got {estimator!r}", "estimator")
    fn = make_estimator(estimator, **(params or {}))
    return fn.__name__, fn


def audit_monotonicity(
    estimator: str | Callable[[NDArray], MeansEstimate],
    trials: int,
    n: int,
    seed: int = 0,
    params: dict | None = None,
    *,
    inject: Sequence[tuple[ArrayLike, ArrayLike]] = (),
    sparsity: int | None = None,
    signal_c: float = 2.0,
) -> MonotoneReport:
    """Count monotonicity violations over ``trials`` majorising pairs.

    Trial ``i`` draws from ``seeded_substream(seed, i)``: a truth with
    ``sparsity`` equal spikes of height ``sqrt(signal_c log(n/s))`` on a
    random support (spikes near the selection boundary are where
    violations would surface), then a pair from
    :func:`sample_majorizing_pair`. Pairs in ``inject`` (each ``(y, z)``
    with ``y`` majorising ``z``) replace the first trials in order.
    """
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}", "trials")
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}", "n")
    name, fn = _resolve(estimator, params)
    s = sparsity if sparsity is not None else max(1, math.isqrt(n))
    if not 1 <= s < n:
        raise ConfigError(f"sparsity must lie in [1, n), got {s}", "sparsity")
    height = math.sqrt(signal_c * math.log(n / s))
    report = MonotoneReport(name, trials)
    injected = [(as_vector(y), as_vector(z)) for y, z in inject]
    for i in range(trials):
        if i < len(injected):
            y, z = injected[i]
            if y.size != n or z.size != n:
                raise ConfigError(f"injected pair {i} has length {y.size}, expected {n}", "inject")
        else:
            rng = seeded_substream(seed, i)
            truth = np.zeros(n)
            truth[rng.choice(n, size=s, replace=False)] = height
            y, z = sample_majorizing_pair(truth, rng)
        value_bad, selection_bad, by, bz = _check_pair(fn, y, z)
        # one count per pair; losing a selected coordinate also fails majorisation
        report.value_violations += int(value_bad)
        report.selection_violations += int(selection_bad)
        if value_bad and report.first_trial is None:
            report.first_trial = i
            report.first_counterexample = (y.copy(), z.copy())
            report.first_estimates = (by, bz)
    return report


def format_counterexample(report: MonotoneReport) -> str:
    """Plain-text dump of the first violating pair at full precision."""
    if report.first_counterexample is None:
        return ""
    y, z = report.first_counterexample
    by, bz = report.first_estimates
    lines = [
        f"# estimator={report.estimator} trial={report.first_trial}",
        "index,y,z,beta_hat_y,beta_hat_z",
    ]
    for i in range(y.size):
        lines.append(",".join([str(i)] + [repr(float(v[i])) for v in (y, z, by, bz)]))
    return "\n".join(lines) + "\n"


def write_counterexample(report: MonotoneReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_counterexample(report))
    return path
