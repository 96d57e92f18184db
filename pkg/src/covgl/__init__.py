"""Covariance estimation by group-Lasso matrix regression over dictionaries."""

__version__ = "0.1.0"

from .dictionary import (
    BasisSpec,
    DesignMatrix,
    DesignPoints,
    build_dictionary,
    compute_weights,
    subset_columns,
)
from .errors import (
    AssumptionViolatedError,
    BudgetExceededError,
    ConvergenceError,
    CovGLError,
    ReplicateError,
    SingularGramError,
    ValidationError,
)
from .estimator import (
    EstimateReport,
    EstimatorConfig,
    SolveResult,
    SupportRule,
    default_lambda,
    empirical_covariance,
    estimate,
    kkt_residual,
    mad_noise_estimate,
    refit,
    select_support,
    solve_group_lasso,
    solve_orthogonal,
    sparse_pca,
)

__all__ = [
    "AssumptionViolatedError",
    "BasisSpec",
    "BudgetExceededError",
    "ConvergenceError",
    "CovGLError",
    "DesignMatrix",
    "DesignPoints",
    "EstimateReport",
    "EstimatorConfig",
    "ReplicateError",
    "SingularGramError",
    "SolveResult",
    "SupportRule",
    "ValidationError",
    "build_dictionary",
    "compute_weights",
    "default_lambda",
    "empirical_covariance",
    "estimate",
    "kkt_residual",
    "mad_noise_estimate",
    "refit",
    "select_support",
    "solve_group_lasso",
    "solve_orthogonal",
    "sparse_pca",
    "subset_columns",
]
