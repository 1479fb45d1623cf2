"""False-discovery behaviour of rate-minimax sparse estimators."""

from .core import (
    BudgetError,
    ChiSquareBound,
    ConfigError,
    DomainError,
    FitDegenerateError,
    LogFactorialPenalty,
    SelectionDiagnostics,
    SingularDesignError,
    chi_square_tail,
    seeded_substream,
    std_normal_cdf,
    std_normal_quantile,
    support,
)
from .diagnostics import binomial_fp_oracle, diagnose, fdr_rate_exponent
from .means_estimators import (
    MeansEstimate,
    bh_stepup,
    counterexample_estimate,
    fixed_threshold,
    hard_threshold,
    solve_means_log_factorial,
    top_s_oracle,
)
from .monotone import audit_monotonicity, majorizes, sample_majorizing_pair
from .montecarlo import EstimatorSpec, ExperimentConfig, run_experiment, run_sweep
from .regression import (
    ModelScore,
    SearchMethod,
    gaussian_design,
    rss,
    solve_regression_penalized,
    worst_case_beta,
)

__version__ = "0.1.0"
