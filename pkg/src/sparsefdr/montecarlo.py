"""Seeded Monte Carlo harness.

Replicate ``r`` of an experiment draws everything (support, design, noise)
from ``seeded_substream(master_seed, r)`` and nothing else, so results do
not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import io
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import means_estimators as me
from .core import (
    UINT64_MAX,
    BudgetError,
    ConfigError,
    DomainError,
    FitDegenerateError,
    LogFactorialPenalty,
    seeded_substream,
)
from .diagnostics import LogLogFit, diagnose, fdr_rate_exponent
from .regression import SearchMethod, gaussian_design, solve_regression_penalized, worst_case_beta

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

__all__ = [
    "EstimatorSpec",
    "ExperimentConfig",
    "ReplicateRow",
    "ExperimentSummary",
    "SweepResult",
    "resolve_sparsity",
    "run_replicate",
    "run_experiment",
    "run_sweep",
    "load_config",
    "config_from_mapping",
    "REPLICATE_HEADER",
    "SUMMARY_HEADER",
    "FIT_HEADER",
]

REPLICATE_HEADER = [
    "replicate", "model", "n", "p", "s", "gamma", "estimator",
    "fp", "tp", "fn", "fdp", "l2_sq", "runtime_ms",
]
SUMMARY_HEADER = [
    "n", "p", "s", "estimator", "mean_fp", "se_fp", "fdr", "se_fdr",
    "mean_l2_sq", "freq_fp_zero", "freq_exact_recovery", "dropped_zero_fdr_points",
]
FIT_HEADER = ["slope", "intercept", "r_squared", "points_used"]

_RULE = re.compile(r"^\s*(fixed|poly|linear)\s*\(\s*([^)]+?)\s*\)\s*$|^\s*(sqrt_n)\s*$")
MAX_SPARSITY_FRACTION = 0.9


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    estimator: EstimatorSpec
    replicates: int
    model: str = "means"
    p: int | None = None
    sparsity_rule: str = "sqrt_n"
    signal_c: float = 2.0
    master_seed: int = 0
    truth: str = "worst_case"

    @property
    def dim(self) -> int:
        return self.n if self.model == "means" or self.p is None else self.p

    @property
    def s(self) -> int:
        return resolve_sparsity(self.sparsity_rule, self.n, self.dim)

    def validate(self) -> "ExperimentConfig":
        if self.model not in ("means", "regression"):
            raise ConfigError(f"unknown model {self.model!r}", "model")
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"must be an integer >= 2, got {self.n!r}", "n")
        if self.model == "means" and self.p not in (None, self.n):
            raise ConfigError(f"means model requires p == n, got p={self.p}", "p")
        if self.model == "regression" and (not isinstance(self.p, int) or self.p < 2):
            raise ConfigError(f"regression model requires integer p >= 2, got {self.p!r}", "p")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ConfigError(f"must be a positive integer, got {self.replicates!r}", "replicates")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed <= UINT64_MAX):
            raise ConfigError("must be a 64-bit unsigned integer", "master_seed")
        if not (self.signal_c > 0 and math.isfinite(self.signal_c)):
            raise ConfigError(f"must be positive, got {self.signal_c}", "signal_c")
        if self.truth not in ("worst_case", "null"):
            raise ConfigError(f"must be 'worst_case' or 'null', got {self.truth!r}", "truth")
        s = self.s
        if self.truth == "worst_case" and s >= self.dim:
            raise ConfigError("worst-case spikes need s < p", "sparsity_rule")
        _build_estimator(self)  # parameter validation only
        return self


def resolve_sparsity(rule: str, n: int, p: int) -> int:
    """Turn a sparsity rule into a support size in [1, 0.9 p].

    Rules: ``fixed(s)``, ``sqrt_n`` (floor(sqrt(n))), ``poly(alpha)``
    (floor(p**alpha), alpha in (0,1)), ``linear(delta)`` (floor(delta p),
    delta in (0, 0.9]).
    """
    m = _RULE.match(str(rule))
    if not m:
        raise ConfigError(f"cannot parse {rule!r}", "sparsity_rule")
    kind = m.group(1) or m.group(3)
    arg = m.group(2)
    try:
        if kind == "sqrt_n":
            s = math.isqrt(n)
        elif kind == "fixed":
            s = int(arg)
            if str(s) != arg:
                raise ValueError
        elif kind == "poly":
            alpha = float(arg)
            if not 0 < alpha < 1:
                raise ConfigError(f"poly exponent must lie in (0, 1), got {alpha}", "sparsity_rule")
            s = math.floor(p**alpha)
        else:
            delta = float(arg)
            if not 0 < delta <= MAX_SPARSITY_FRACTION:
                raise ConfigError(f"linear fraction must lie in (0, 0.9], got {delta}", "sparsity_rule")
            s = math.floor(delta * p)
    except ValueError:
        raise ConfigError(f"bad argument in {rule!r}", "sparsity_rule") from None
    if not 1 <= s <= MAX_SPARSITY_FRACTION * p:
        raise ConfigError(f"{rule!r} gives s={s}, outside [1, 0.9*p={0.9 * p:g}]", "sparsity_rule")
    return s


def _build_estimator(cfg: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray]:
    """Return a function mapping (X or None, y) to beta_hat."""
    params = dict(cfg.estimator.params)
    s = cfg.s
    try:
        if cfg.model == "regression":
            name = me.canonical_name(cfg.estimator.name)
            if name != "log_factorial":
                raise ConfigError("regression model supports only log_factorial", "estimator.name")
            gamma = params.pop("gamma", None)
            if gamma is None:
                raise ConfigError("missing gamma", "estimator.gamma")
            p_tilde = int(params.pop("p_tilde", min(cfg.n, cfg.dim)))
            method = SearchMethod(str(params.pop("method", "exhaustive")),
                                  int(params.pop("guard_limit", SearchMethod().guard_limit)))
            if params:
                raise ConfigError(f"unexpected parameters {sorted(params)}", "estimator")
            pen = LogFactorialPenalty(float(gamma), cfg.dim, p_tilde)

            def fit(X, y):
                return solve_regression_penalized(X, y, pen, method)[0]

            return fit
        name = me.canonical_name(cfg.estimator.name)
        if name == "hard_threshold":
            params.setdefault("s", s)
        elif name == "top_s_oracle":
            params.setdefault("s_star", s)
        elif name == "fixed_threshold":
            params.setdefault("t", me.no_false_positive_threshold(cfg.n, s))
        est = me.make_estimator(name, **params)
        # fail fast on parameter domain errors
        est(np.zeros(cfg.n))
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "estimator") from None
    return lambda X, y: est(y).beta_hat


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    fp: int
    tp: int
    fn: int
    fdp: float
    l2_sq: float
    symdiff_ratio: float
    runtime_ms: float | None = None


def run_replicate(cfg: ExperimentConfig, r: int, fit=None, record_timing: bool = False) -> ReplicateRow:
    fit = fit or _build_estimator(cfg)
    rng = seeded_substream(cfg.master_seed, r)
    n, p, s = cfg.n, cfg.dim, cfg.s
    if cfg.truth == "null":
        truth = np.zeros(p)
    else:
        truth = worst_case_beta(p, s, cfg.signal_c, n if cfg.model == "regression" else None, rng)
    if cfg.model == "regression":
        X = gaussian_design(n, p, rng)
        y = X @ truth + rng.standard_normal(n)
    else:
        X = None
        y = truth + rng.standard_normal(n)
    t0 = time.perf_counter()
    try:
        beta = fit(X, y)
    except BudgetError as exc:
        raise BudgetError(exc.required, exc.limit, replicate=r) from None
    elapsed = (time.perf_counter() - t0) * 1e3 if record_timing else None
    d = diagnose(beta, truth)
    return ReplicateRow(r, d.fp, d.tp, d.fn_count, d.fdp, d.l2_sq, d.symdiff_ratio, elapsed)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    mean_fp: float
    se_fp: float
    mean_fdp: float
    se_fdp: float
    mean_l2_sq: float
    se_l2_sq: float
    freq_fp_zero: float
    freq_exact_recovery: float
    mean_symdiff_ratio: float
    rows: list[ReplicateRow]
    dropped_from_fit: bool = False

    @property
    def fdr(self) -> float:
        return self.mean_fdp

    @classmethod
    def from_rows(cls, cfg: ExperimentConfig, rows: list[ReplicateRow]) -> "ExperimentSummary":
        fp = np.array([r.fp for r in rows], dtype=np.float64)
        fn = np.array([r.fn for r in rows], dtype=np.float64)
        fdp = np.array([r.fdp for r in rows])
        l2 = np.array([r.l2_sq for r in rows])
        return cls(
            cfg,
            *_mean_se(fp),
            *_mean_se(fdp),
            *_mean_se(l2),
            float(np.mean(fp == 0)),
            float(np.mean((fp == 0) & (fn == 0))),
            float(np.mean([r.symdiff_ratio for r in rows])),
            rows,
        )

    def replicate_table(self) -> list[list[str]]:
        cfg = self.config
        gamma = cfg.estimator.params.get("gamma")
        out = []
        for r in self.rows:
            out.append([
                str(r.replicate), cfg.model, str(cfg.n), str(cfg.dim), str(cfg.s),
                "" if gamma is None else _fmt(float(gamma)), cfg.estimator.label(),
                str(r.fp), str(r.tp), str(r.fn), _fmt(r.fdp), _fmt(r.l2_sq),
                "" if r.runtime_ms is None else f"{r.runtime_ms:.3f}",
            ])
        return out

    def summary_row(self) -> list[str]:
        cfg = self.config
        return [
            str(cfg.n), str(cfg.dim), str(cfg.s), cfg.estimator.label(),
            _fmt(self.mean_fp), _fmt(self.se_fp), _fmt(self.mean_fdp), _fmt(self.se_fdp),
            _fmt(self.mean_l2_sq), _fmt(self.freq_fp_zero), _fmt(self.freq_exact_recovery),
            str(int(self.dropped_from_fit)),
        ]


def _fmt(x: float) -> str:
    return repr(float(x))


def run_experiment(cfg: ExperimentConfig, threads: int = 1, record_timing: bool = False) -> ExperimentSummary:
    """Run all replicates and aggregate in replicate order.

    Raises
    ------
    ConfigError
        Before any computation, for an invalid configuration.
    BudgetError
        An exhaustive regression search exceeded its guard (carries the
        replicate index).
    """
    cfg.validate()
    if threads < 1:
        raise ConfigError(f"must be positive, got {threads}", "threads")
    fit = _build_estimator(cfg)

    def one(r):
        return run_replicate(cfg, r, fit, record_timing)

    if threads == 1:
        rows = [one(r) for r in range(cfg.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(cfg.replicates)))
    return ExperimentSummary.from_rows(cfg, rows)


@dataclass
class SweepResult:
    summaries: list[ExperimentSummary]
    fit: LogLogFit | None
    dropped_zero_fdr_points: int

    def table(self) -> list[dict]:
        return [
            {"n": s.config.n, "p": s.config.dim, "s": s.config.s, "fdr": s.fdr,
             "dropped": s.dropped_from_fit}
            for s in self.summaries
        ]


def fit_sweep(summaries: Sequence[ExperimentSummary]) -> tuple[LogLogFit, int]:
    """Fit log(FDR) on log(s/p), dropping zero-FDR points.

    Raises FitDegenerateError (with the raw table) if fewer than three
    points survive.
    """
    points = []
    dropped = 0
    for s in summaries:
        if s.fdr > 0.0:
            points.append((s.config.s / s.config.dim, s.fdr))
            s.dropped_from_fit = False
        else:
            s.dropped_from_fit = True
            dropped += 1
    if len(points) < 3:
        table = [(s.config.n, s.config.s, s.fdr) for s in summaries]
        raise FitDegenerateError(
            f"only {len(points)} sweep points have nonzero FDR ({dropped} dropped); need 3",
            table,
        )
    return fdr_rate_exponent(points), dropped


def run_sweep(base: ExperimentConfig, n_values: Sequence[int], threads: int = 1,
              record_timing: bool = False) -> SweepResult:
    """Run ``base`` at every ``n`` and fit the log-log FDR trend.

    For the means model ``p`` follows ``n``; for regression ``p`` is kept.
    """
    if len(n_values) < 3:
        raise ConfigError(f"need at least 3 values, got {len(n_values)}", "n_values")
    configs = [replace(base, n=int(n)).validate() for n in n_values]
    summaries = [run_experiment(c, threads, record_timing) for c in configs]
    try:
        fit, dropped = fit_sweep(summaries)
    except FitDegenerateError as exc:
        exc.result = SweepResult(summaries, None, sum(s.dropped_from_fit for s in summaries))
        raise
    return SweepResult(summaries, fit, dropped)


def config_from_mapping(data: Mapping[str, Any]) -> tuple[ExperimentConfig, list[int] | None]:
    """Build a config from a parsed mapping; returns ``(config, n_values)``."""
    data = dict(data)
    est = data.pop("estimator", None)
    if not isinstance(est, Mapping) or "name" not in est:
        raise ConfigError("must be a table with at least a 'name' key", "estimator")
    est = dict(est)
    spec = EstimatorSpec(str(est.pop("name")), est)
    n_values = data.pop("n_values", None)
    known = {"model", "n", "p", "sparsity_rule", "signal_c", "replicates", "master_seed", "truth"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", unknown[0])
    if "n" not in data:
        if n_values:
            data["n"] = int(n_values[0])
        else:
            raise ConfigError("missing", "n")
    if "replicates" not in data:
        raise ConfigError("missing", "replicates")
    if "signal_c" in data:
        data["signal_c"] = float(data["signal_c"])
    cfg = ExperimentConfig(estimator=spec, **data)
    if n_values is not None:
        if not isinstance(n_values, list) or not all(isinstance(v, int) for v in n_values):
            raise ConfigError("must be a list of integers", "n_values")
    return cfg, n_values


def load_config(path: str | Path) -> tuple[ExperimentConfig, list[int] | None]:
    """Read a TOML experiment file whose keys mirror :class:`ExperimentConfig`."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"not valid TOML: {exc}", str(path)) from None
    return config_from_mapping(data)


def _write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())
    return path


def write_experiment(summary: ExperimentSummary, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return {
        "replicates": _write_csv(out / "replicates.csv", REPLICATE_HEADER, summary.replicate_table()),
        "summary": _write_csv(out / "summary.csv", SUMMARY_HEADER, [summary.summary_row()]),
    }


def write_sweep(result: SweepResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [row for s in result.summaries for row in s.replicate_table()]
    paths = {
        "replicates": _write_csv(out / "replicates.csv", REPLICATE_HEADER, rows),
        "summary": _write_csv(out / "summary.csv", SUMMARY_HEADER,
                              [s.summary_row() for s in result.summaries]),
    }
    if result.fit is not None:
        f = result.fit
        paths["fit"] = _write_csv(out / "fit.csv", FIT_HEADER,
                                  [[_fmt(f.slope), _fmt(f.intercept), _fmt(f.r_squared), str(f.points_used)]])
    return paths
