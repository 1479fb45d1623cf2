"""Command-line front end.

Exit codes: 0 success, 1 property violation found, 2 input error,
3 configuration error, 4 search budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import means_estimators as me
from .core import BudgetError, ConfigError, DomainError, FitDegenerateError, LogFactorialPenalty
from .monotone import audit_monotonicity, format_counterexample, nonmonotone_pair
from .montecarlo import load_config, run_experiment, run_sweep, write_experiment, write_sweep
from .regression import SearchMethod, solve_regression_penalized
from .svg import fdr_trend_series, render_svg

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3, 4

PARAM_FLAGS = ("gamma", "s", "q", "p_tilde", "t", "s_star")


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"sparsefdr: {msg}", file=sys.stderr)


def read_numeric_csv(path: str | Path) -> np.ndarray:
    """Read a rectangular numeric CSV; a non-numeric first row is a header."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    data = []
    width = None
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if lineno == 1:
                continue
            raise InputError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{path}:{lineno}: expected {width} columns, got {len(vals)}")
        data.append(vals)
    if not data:
        raise InputError(f"{path}: no data rows")
    return np.array(data, dtype=np.float64)


def _estimator_params(args) -> dict:
    return {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k, None) is not None}


def _means_estimator(name: str, params: dict):
    key = me.canonical_name(name)
    if key == "top_s_oracle" and "s" in params and "s_star" not in params:
        params["s_star"] = params.pop("s")
    return me.make_estimator(key, **params)


def cmd_estimate(args) -> int:
    data = read_numeric_csv(args.input)
    params = _estimator_params(args)
    out_dir = Path(args.out)
    if data.shape[1] == 1:
        y = data[:, 0]
        if args.method is not None:
            raise ConfigError("--method applies to regression input only", "method")
        est = _means_estimator(args.estimator, params)(y)
        beta, k, objective = est.beta_hat, est.selected_k, est.objective_value
    else:
        X, y = data[:, :-1], data[:, -1]
        if me.canonical_name(args.estimator) != "log_factorial":
            raise ConfigError("regression input supports only log-factorial", "estimator")
        if "gamma" not in params:
            raise ConfigError("missing --gamma", "gamma")
        extra = sorted(set(params) - {"gamma", "p_tilde"})
        if extra:
            raise ConfigError(f"unexpected flags {extra}", "estimator")
        n, p = X.shape
        pen = LogFactorialPenalty(params["gamma"], p, params.get("p_tilde", min(n, p)))
        method = SearchMethod(args.method or "exhaustive", args.guard_limit)
        beta, score = solve_regression_penalized(X, y, pen, method)
        k, objective = len(score.subset), score.sc
        if score.heuristic:
            print("note: greedy search, result is heuristic")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "estimate.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value", "selected"])
        for i, v in enumerate(beta):
            w.writerow([i, repr(float(v)), "true" if v != 0.0 else "false"])
    print(f"selected_k: {k}")
    print(f"objective: {'' if objective is None else repr(float(objective))}")
    print(f"output: {path}")
    return EXIT_OK


def _load(args):
    cfg, n_values = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg, n_values


def cmd_experiment(args) -> int:
    cfg, _ = _load(args)
    summary = run_experiment(cfg, threads=args.threads, record_timing=args.record_timing)
    paths = write_experiment(summary, args.out)
    print(f"fdr: {summary.fdr!r}  mean_fp: {summary.mean_fp!r}  replicates: {cfg.replicates}")
    for p in paths.values():
        print(f"output: {p}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, n_values = _load(args)
    if not n_values:
        raise ConfigError("sweep needs a list of n values", "n_values")
    try:
        result = run_sweep(cfg, n_values, threads=args.threads, record_timing=args.record_timing)
    except FitDegenerateError as exc:
        write_sweep(exc.result, args.out)
        _err(f"fit degenerate: {exc}")
        for n, s, fdr in exc.table:
            _err(f"  n={n} s={s} fdr={fdr!r}")
        return EXIT_VIOLATION
    paths = write_sweep(result, args.out)
    points = [(s.config.s / s.config.dim, s.fdr) for s in result.summaries]
    svg_path = Path(args.out) / "fdr_trend.svg"
    svg_path.write_text(render_svg(fdr_trend_series(points, result.fit)))
    f = result.fit
    print(f"slope: {f.slope!r}  intercept: {f.intercept!r}  r_squared: {f.r_squared!r}  "
          f"points_used: {f.points_used}  dropped: {result.dropped_zero_fdr_points}")
    for p in [*paths.values(), svg_path]:
        print(f"output: {p}")
    return EXIT_OK


def cmd_audit(args) -> int:
    params = _estimator_params(args)
    name = me.canonical_name(args.estimator)
    if name == "top_s_oracle" and "s" in params and "s_star" not in params:
        params["s_star"] = params.pop("s")
    inject = []
    if args.inject_paper_pair:
        gamma = params.get("gamma")
        if gamma is None:
            raise ConfigError("--inject-paper-pair needs --gamma", "gamma")
        small, large = nonmonotone_pair(args.n, gamma)
        inject.append((large, small))
    report = audit_monotonicity(name, args.trials, args.n, args.seed, params, inject=inject)
    print(report.summary())
    if report.clean:
        return EXIT_OK
    dump = format_counterexample(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "counterexample.csv").write_text(dump)
        print(f"output: {out / 'counterexample.csv'}")
    else:
        print(dump, end="")
    return EXIT_VIOLATION


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float)
    p.add_argument("--s", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--p-tilde", dest="p_tilde", type=int)
    p.add_argument("--t", type=float, help="fixed threshold level")
    p.add_argument("--s-star", dest="s_star", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsefdr", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="apply an estimator to a CSV of y or of X,y")
    p.add_argument("input")
    p.add_argument("estimator")
    _add_estimator_flags(p)
    p.add_argument("--method", choices=["exhaustive", "greedy"])
    p.add_argument("--guard-limit", dest="guard_limit", type=int, default=SearchMethod().guard_limit)
    p.add_argument("--seed", type=int, help="accepted for uniformity; estimation is deterministic")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_estimate)

    for name, func, help_ in (
        ("experiment", cmd_experiment, "run one seeded Monte Carlo experiment"),
        ("sweep", cmd_sweep, "run an experiment over a grid of n and fit the FDR trend"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default="results")
        p.add_argument("--record-timing", action="store_true",
                       help="fill runtime_ms (makes the replicate CSV non-reproducible)")
        p.set_defaults(func=func)

    p = sub.add_parser("audit", help="search for monotonicity violations")
    p.add_argument("estimator")
    _add_estimator_flags(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-paper-pair", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        _err("threads: must be positive")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except BudgetError as exc:
        _err(str(exc))
        return EXIT_BUDGET
    except (ConfigError, DomainError) as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
