"""Exception types raised across the package."""


class CovGLError(Exception):
    """Base class for all errors raised by covgl."""


class ValidationError(CovGLError, ValueError):
    """Malformed or inconsistent input."""


class BudgetExceededError(CovGLError):
    """Subset enumeration would exceed the configured budget."""

    def __init__(self, n_subsets, budget):
        self.n_subsets = n_subsets
        self.budget = budget
        super().__init__(
            f"restricted eigenvalue needs {n_subsets} subsets, budget is {budget}"
        )


class SingularGramError(CovGLError):
    """A Gram matrix is too ill-conditioned to invert."""

    def __init__(self, cond, limit):
        self.cond = cond
        self.limit = limit
        super().__init__(
            f"Gram matrix condition number {cond:.3e} exceeds limit {limit:.1e}"
        )


class AssumptionViolatedError(CovGLError):
    """The coherence condition fails, so kappa is undefined."""


class ConvergenceError(CovGLError):
    """An iterative solver stopped before meeting its tolerances."""


class ReplicateError(CovGLError):
    """A Monte Carlo replicate failed; ``replicate`` is its 0-based index."""

    def __init__(self, replicate, cause):
        self.replicate = replicate
        self.cause = cause
        super().__init__(f"replicate {replicate} failed: {cause}")
