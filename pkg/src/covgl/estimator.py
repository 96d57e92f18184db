"""Group-Lasso covariance estimation over a dictionary.

The estimator minimizes

    ||S - G Psi G^T||_F^2 + 2 lam sum_k gamma_k ||Psi_k||_2

over symmetric (default) or unrestricted ``M x M`` matrices ``Psi``, where
``S`` is the empirical covariance of the noisy samples and ``Psi_k`` is the
k-th column.  A support of active columns is then selected and the covariance
is refit by unpenalized least squares on that support.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import wavelets
from .dictionary import DesignMatrix, compute_weights, subset_columns
from .errors import SingularGramError, ValidationError

log = logging.getLogger(__name__)

MAD_CONSTANT = 0.6745
REFIT_COND_LIMIT = 1e12
MODES = ("symmetric", "unconstrained")
REFIT_MODES = ("error", "pinv")

# residual balancing for the consensus penalty
_BALANCE_RATIO = 10.0
_BALANCE_FACTOR = 2.0
_KKT_CHECK_EVERY = 10
_BALANCE_EVERY = 1
# Anderson extrapolation: history length and rejection factor
_AA_MEMORY = 8
_AA_SAFEGUARD = 2.0


@dataclass(frozen=True)
class SupportRule:
    """How to turn solved column norms into an active set.

    ``kind`` is ``"lcurve"``, ``"epsilon"`` (keep norms above ``value``) or
    ``"theory"`` (keep ``delta_k / sqrt(n) * norm`` above ``value``).
    """

    kind: str = "lcurve"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("lcurve", "epsilon", "theory"):
            raise ValidationError(f"unknown support rule {self.kind!r}")
        if self.kind != "lcurve":
            if self.value is None:
                raise ValidationError(f"support rule {self.kind!r} needs a value")
            if self.value < 0:
                raise ValidationError(f"support threshold must be non-negative, got {self.value}")

    @classmethod
    def parse(cls, text):
        """Parse ``"lcurve"``, ``"epsilon=V"`` or ``"theory=V"``."""
        if isinstance(text, SupportRule):
            return text
        name, _, value = str(text).partition("=")
        name = name.strip()
        if name == "lcurve" and not value:
            return cls("lcurve")
        try:
            return cls(name, float(value))
        except ValueError:
            raise ValidationError(f"cannot parse support rule {text!r}") from None

    def __str__(self):
        return self.kind if self.kind == "lcurve" else f"{self.kind}={self.value:.17g}"


@dataclass(frozen=True)
class EstimatorConfig:
    lam: float | str = "auto"
    delta_conf: float = 1.1
    mode: str = "symmetric"
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    tol_kkt: float = 1e-9
    max_iter: int = 5000
    support_rule: SupportRule = field(default_factory=SupportRule)
    noise_wavelet: str = "symmlet8"
    center: bool = False
    rho0: float = 1.0
    refit: str = "error"

    def __post_init__(self):
        if isinstance(self.support_rule, str):
            object.__setattr__(self, "support_rule", SupportRule.parse(self.support_rule))
        if self.lam != "auto":
            if isinstance(self.lam, str) or not self.lam >= 0 or not math.isfinite(self.lam):
                raise ValidationError(f"lambda must be 'auto' or a finite non-negative number, got {self.lam!r}")
            object.__setattr__(self, "lam", float(self.lam))
        if not self.delta_conf > 1:
            raise ValidationError(f"delta must exceed 1, got {self.delta_conf}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("tol_primal", "tol_dual", "tol_kkt", "rho0"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError("max_iter must be a positive integer")
        if self.refit not in REFIT_MODES:
            raise ValidationError(f"refit must be one of {REFIT_MODES}, got {self.refit!r}")
        if self.noise_wavelet not in wavelets.FILTERS:
            raise ValidationError(f"unknown noise wavelet {self.noise_wavelet!r}")

    def with_options(self, **changes):
        return replace(self, **changes)


@dataclass
class SolveResult:
    Psi_hat: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    kkt_residual: float
    converged: bool
    mode: str
    rho: float = float("nan")


@dataclass
class EstimateReport:
    lambda_used: float
    sigma2_noise_hat: float
    Psi_hat: np.ndarray
    Sigma_lambda: np.ndarray
    J_hat: np.ndarray
    Psi_refit: np.ndarray
    Sigma_refit: np.ndarray
    column_norms: np.ndarray
    solver: SolveResult
    S_tilde: np.ndarray = field(repr=False, default=None)

    def summary(self):
        """JSON-ready scalars and small arrays (matrices are written separately)."""
        return {
            "lambda": self.lambda_used,
            "sigma2_noise_hat": self.sigma2_noise_hat,
            "J_hat": [int(k) for k in self.J_hat],
            "support_size": int(self.J_hat.size),
            "column_norms": [float(v) for v in self.column_norms],
            "solver": {
                "mode": self.solver.mode,
                "objective": self.solver.objective,
                "iterations": self.solver.iterations,
                "primal_residual": self.solver.primal_residual,
                "dual_residual": self.solver.dual_residual,
                "kkt_residual": self.solver.kkt_residual,
                "converged": self.solver.converged,
            },
        }


def _as_design(G):
    return G if isinstance(G, DesignMatrix) else DesignMatrix(G)


def _check_symmetric(A, name, rtol=1e-10):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    if np.abs(A - A.T).max(initial=0.0) > rtol * max(np.abs(A).max(initial=0.0), 1.0):
        raise ValidationError(f"{name} must be symmetric")
    return A


def _symmetrize(A):
    return 0.5 * (A + A.T)


def as_samples(X):
    """Validate an ``N x n`` sample array (one observation per row)."""
    X = np.array(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValidationError("samples must be a non-empty N x n array")
    if not np.all(np.isfinite(X)):
        raise ValidationError("samples have non-finite entries")
    return X


def empirical_covariance(X, center=False):
    """``(1/N) sum_i x_i x_i^T`` over the rows of ``X``; no centering by default."""
    X = as_samples(X)
    if center:
        X = X - X.mean(axis=0)
    return _symmetrize(X.T @ X / X.shape[0])


def mad_noise_estimate(X, wavelet="symmlet8"):
    """Noise variance from the finest-scale wavelet details of each replicate.

    Each row gives ``median(|d|) / 0.6745``; the median of these across rows is
    squared.  Rows whose length is not a power of two use their longest dyadic
    prefix.
    """
    X = as_samples(X)
    n = X.shape[1]
    if n < 2:
        raise ValidationError("noise estimation needs at least two points per sample")
    L = 1 << int(math.floor(math.log2(n)))
    h, g = wavelets.filter_pair(wavelet)
    details = wavelets.analysis_step(X[:, :L].T, h, g)[1]  # (L/2, N)
    sigmas = np.median(np.abs(details), axis=0) / MAD_CONSTANT
    return float(np.median(sigmas) ** 2)


def default_lambda(sigma2_noise, n, N, M, delta_conf=1.1):
    """``sigma^2 (1 + sqrt(n/N) + sqrt(2 delta log(M) / N))^2`` with natural log."""
    if M < 2:
        raise ValidationError("lambda rule needs M >= 2")
    if n < 1 or N < 1:
        raise ValidationError("n and N must be positive")
    if sigma2_noise < 0:
        raise ValidationError("noise variance must be non-negative")
    if not delta_conf > 1:
        raise ValidationError(f"delta must exceed 1, got {delta_conf}")
    return sigma2_noise * (1.0 + math.sqrt(n / N) + math.sqrt(2.0 * delta_conf * math.log(M) / N)) ** 2


def solve_orthogonal(Y, lam, gamma):
    """Column-wise group soft thresholding of ``Y = G^T S G``.

    Column k is zeroed when ``||Y_k|| <= lam * gamma_k`` and otherwise scaled
    by ``1 - lam * gamma_k / ||Y_k||``.  This is the exact minimizer over
    unrestricted matrices when ``G^T G = I``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValidationError("Y must be square")
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (Y.shape[1],))
    if np.any(gamma <= 0):
        raise ValidationError("weights must be positive")
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    norms = np.linalg.norm(Y, axis=0)
    thresh = lam * gamma
    keep = norms > thresh
    factor = np.zeros_like(norms)
    factor[keep] = 1.0 - thresh[keep] / norms[keep]
    return Y * factor


def group_lasso_objective(S, G, Psi, lam, gamma=None):
    G = _as_design(G)
    gamma = compute_weights(G)[0] if gamma is None else np.asarray(gamma, dtype=float)
    fit = S - G.G @ Psi @ G.G.T
    return float(np.sum(fit * fit) + 2.0 * lam * np.dot(gamma, np.linalg.norm(Psi, axis=0)))


def kkt_residual(S, G, Psi, lam, gamma=None):
    """Largest violation of the column-wise optimality conditions.

    With ``R = G^T (S - G Psi G^T) G``: nonzero columns need
    ``R_k = lam gamma_k Psi_k / ||Psi_k||`` and zero columns need
    ``||R_k|| <= lam gamma_k``.  Exact certificate for the unrestricted
    problem; an upper-bound diagnostic in symmetric mode.
    """
    G = _as_design(G)
    S = np.asarray(S, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    if S.shape != (G.n, G.n) or Psi.shape != (G.M, G.M):
        raise ValidationError("shape mismatch between S, G and Psi")
    gamma = compute_weights(G)[0] if gamma is None else np.broadcast_to(np.asarray(gamma, dtype=float), (G.M,))
    R = G.G.T @ (S - G.G @ Psi @ G.G.T) @ G.G
    norms = np.linalg.norm(Psi, axis=0)
    active = norms > 0
    worst = 0.0
    if np.any(active):
        sub = R[:, active] - lam * gamma[active] * Psi[:, active] / norms[active]
        worst = float(np.linalg.norm(sub, axis=0).max())
    if np.any(~active):
        slack = np.linalg.norm(R[:, ~active], axis=0) - lam * gamma[~active]
        worst = max(worst, float(np.maximum(slack, 0.0).max()))
    return worst


class _Eigenbasis:
    """Eigendecomposition of ``G^T G`` reused across iterations.

    ``Q`` is None when the Gram matrix is a multiple of the identity, in which
    case every rotation is skipped.
    """

    def __init__(self, gram):
        M = gram.shape[0]
        c = float(np.mean(np.diag(gram)))
        if c > 0 and np.abs(gram - c * np.eye(M)).max() <= 1e-10 * c:
            self.Q = None
            self.evals = np.full(M, c)
        else:
            evals, Q = np.linalg.eigh(gram)
            self.Q = Q
            self.evals = np.clip(evals, 0.0, None)

    def to_rotated(self, A):
        return A if self.Q is None else self.Q.T @ A @ self.Q

    def from_rotated(self, A):
        return A if self.Q is None else self.Q @ A @ self.Q.T


def _least_squares(basis, B, G):
    prod = np.outer(basis.evals, basis.evals)
    cutoff = 1e-12 * max(prod.max(), 1e-300)
    Phi = np.where(prod > cutoff, B / np.where(prod > cutoff, prod, 1.0), 0.0)
    return basis.from_rotated(Phi)


def solve_group_lasso(S, G, lam, cfg=None, gamma=None):
    """Minimize the penalized matrix regression criterion.

    Parameters
    ----------
    S : ndarray, shape (n, n)
        Symmetric empirical covariance.
    G : DesignMatrix or ndarray, shape (n, M)
        Dictionary.
    lam : float
        Regularization level, ``lam >= 0``.
    cfg : EstimatorConfig, optional
        Mode, tolerances, iteration cap and initial consensus penalty.
    gamma : array_like, optional
        Column weights; defaults to the dictionary's ``gamma``.

    Returns
    -------
    SolveResult
        ``Psi_hat`` has exactly zero columns outside the active set.  In
        symmetric mode it is exactly symmetric.

    Notes
    -----
    Consensus ADMM on ``Psi = V``.  The quadratic step is solved exactly in
    the eigenbasis of ``G^T G = Q diag(l) Q^T``: in rotated coordinates the
    Hessian is diagonal with entries ``2 l_i l_j``.  The V step is column-wise
    group soft thresholding.  Iterates are kept in rotated coordinates, so one
    iteration costs two ``M x M`` products.  The penalty is adapted by
    residual balancing, and between penalty changes the iteration is
    extrapolated by a safeguarded Anderson step.
    """
    cfg = EstimatorConfig() if cfg is None else cfg
    G = _as_design(G)
    S = _check_symmetric(S, "S_tilde")
    if S.shape[0] != G.n:
        raise ValidationError(f"S_tilde is {S.shape[0]}x{S.shape[0]} but G has {G.n} rows")
    if not lam >= 0:
        raise ValidationError("lambda must be non-negative")
    gamma = compute_weights(G)[0] if gamma is None else np.broadcast_to(np.asarray(gamma, dtype=float), (G.M,))
    if np.any(gamma <= 0):
        raise ValidationError("weights must be positive")

    symmetric = cfg.mode == "symmetric"
    Gm = G.G
    Y = _symmetrize(Gm.T @ S @ Gm)
    basis = _Eigenbasis(Gm.T @ Gm)
    B = basis.to_rotated(Y)
    if symmetric:
        B = _symmetrize(B)

    if lam == 0:
        Psi = _least_squares(basis, B, G)
        if symmetric:
            Psi = _symmetrize(Psi)
        return _finish(S, G, Psi, lam, gamma, cfg.mode, 0, 0.0, 0.0, True, float("nan"))

    M = G.M
    D = 2.0 * np.outer(basis.evals, basis.evals)
    scale_S = 1.0 + float(np.linalg.norm(S))
    tol_p = cfg.tol_primal * scale_S
    tol_d = cfg.tol_dual * scale_S
    Q = basis.Q

    def admm_map(Vt, Ut, rho):
        C = Vt - Ut
        if symmetric:
            C = _symmetrize(C)
        Phi = (2.0 * B + rho * C) / (D + rho)
        W = Phi + Ut
        # column norms in original coordinates: ||Q W Q^T e_k|| = ||W Q^T e_k||
        A = W if Q is None else W @ Q.T
        norms = np.linalg.norm(A, axis=0)
        thresh = 2.0 * lam * gamma / rho
        factor = np.where(norms > thresh, 1.0 - thresh / np.where(norms > 0, norms, 1.0), 0.0)
        AV = A * factor
        Vt_new = AV if Q is None else AV @ Q
        Ut_new = Ut + Phi - Vt_new
        r_norm = float(np.linalg.norm(Phi - Vt_new))
        s_norm = float(rho * np.linalg.norm(Vt_new - Vt))
        return Vt_new, Ut_new, AV, factor, r_norm, s_norm

    rho = cfg.rho0
    x = np.zeros(2 * M * M)
    accel = _Anderson(_AA_MEMORY, 2 * M * M)
    x_plain = None
    g_last = np.inf
    accelerated = False
    converged = False
    kkt = np.inf
    last_kkt_check = -_KKT_CHECK_EVERY
    for it in range(1, cfg.max_iter + 1):
        Vt = x[: M * M].reshape(M, M)
        Ut = x[M * M :].reshape(M, M)
        Vt_new, Ut_new, AV, factor, r_norm, s_norm = admm_map(Vt, Ut, rho)

        if r_norm <= tol_p and s_norm <= tol_d:
            if symmetric:
                converged = True
                break
            if it - last_kkt_check >= _KKT_CHECK_EVERY:
                last_kkt_check = it
                V = AV if Q is None else Q @ AV
                kkt = kkt_residual(S, G, V, lam, gamma)
                if kkt <= cfg.tol_kkt:
                    converged = True
                    break

        fx = np.concatenate([Vt_new.ravel(), Ut_new.ravel()])
        g_norm = float(np.linalg.norm(fx - x))
        if accelerated and g_norm > _AA_SAFEGUARD * g_last:
            # extrapolation made things worse: resume from the plain iterate
            accel.reset()
            x = x_plain
            accelerated = False
            continue
        g_last = g_norm

        if it % _BALANCE_EVERY == 0 and r_norm > _BALANCE_RATIO * s_norm:
            rho *= _BALANCE_FACTOR
            fx[M * M :] /= _BALANCE_FACTOR
            accel.reset()
            x, accelerated = fx, False
        elif it % _BALANCE_EVERY == 0 and s_norm > _BALANCE_RATIO * r_norm:
            rho /= _BALANCE_FACTOR
            fx[M * M :] *= _BALANCE_FACTOR
            accel.reset()
            x, accelerated = fx, False
        else:
            x_plain = fx
            x = accel.step(x, fx)
            accelerated = x is not fx

    V = AV if Q is None else Q @ AV
    V[:, factor == 0] = 0.0
    if symmetric:
        active = factor > 0
        Psi = np.zeros((M, M))
        Psi[np.ix_(active, active)] = _symmetrize(V)[np.ix_(active, active)]
    else:
        Psi = V
    if not converged:
        log.warning(
            "group lasso solver stopped after %d iterations (primal %.3e, dual %.3e)",
            it, r_norm, s_norm,
        )
    return _finish(S, G, Psi, lam, gamma, cfg.mode, it, r_norm, s_norm, converged, rho)


class _Anderson:
    """Type-II Anderson extrapolation of a fixed-point iteration ``x -> f(x)``.

    Differences of iterates and residuals are kept in ring buffers together
    with their Gram matrix, so one step costs a few vector passes.
    """

    def __init__(self, memory, dim):
        self.memory = memory
        self.dX = np.empty((memory, dim))
        self.dG = np.empty((memory, dim))
        self.gram = np.empty((memory, memory))
        self.reset()

    def reset(self):
        self.x_prev = None
        self.g_prev = None
        self.count = 0
        self.head = 0

    def step(self, x, fx):
        g = fx - x
        if self.memory == 0:
            return fx
        if self.x_prev is not None:
            i = self.head
            np.subtract(x, self.x_prev, out=self.dX[i])
            np.subtract(g, self.g_prev, out=self.dG[i])
            self.count = min(self.count + 1, self.memory)
            row = self.dG[: self.count] @ self.dG[i]
            self.gram[i, : self.count] = row
            self.gram[: self.count, i] = row
            self.head = (i + 1) % self.memory
        self.x_prev, self.g_prev = x, g
        k = self.count
        if k == 0:
            return fx
        gram = self.gram[:k, :k]
        reg = 1e-12 * max(np.trace(gram), 1e-300)
        try:
            coef = np.linalg.solve(gram + reg * np.eye(k), self.dG[:k] @ g)
        except np.linalg.LinAlgError:
            self.reset()
            return fx
        return fx - coef @ self.dX[:k] - coef @ self.dG[:k]


def _finish(S, G, Psi, lam, gamma, mode, iterations, r_norm, s_norm, converged, rho):
    return SolveResult(
        Psi_hat=Psi,
        objective=group_lasso_objective(S, G, Psi, lam, gamma),
        iterations=iterations,
        primal_residual=r_norm,
        dual_residual=s_norm,
        kkt_residual=kkt_residual(S, G, Psi, lam, gamma),
        converged=converged,
        mode=mode,
        rho=rho,
    )


def lcurve_support(norms):
    """Columns above the largest ratio gap between consecutive sorted norms."""
    norms = np.asarray(norms, dtype=float)
    nz = np.flatnonzero(norms > 0)
    if nz.size == 0:
        return np.array([], dtype=np.int64)
    order = nz[np.argsort(-norms[nz], kind="stable")]
    if order.size == 1:
        return order.astype(np.int64)
    sorted_norms = norms[order]
    ratios = sorted_norms[:-1] / sorted_norms[1:]
    cut = int(np.argmax(ratios)) + 1
    return np.sort(order[:cut]).astype(np.int64)


def select_support(Psi_hat, G, rule=None):
    """Active column set of a solved ``Psi_hat`` under ``rule``."""
    rule = SupportRule() if rule is None else SupportRule.parse(rule)
    norms = np.linalg.norm(np.asarray(Psi_hat, dtype=float), axis=0)
    if rule.kind == "lcurve":
        return lcurve_support(norms)
    if rule.kind == "epsilon":
        return np.flatnonzero(norms > rule.value).astype(np.int64)
    G = _as_design(G)
    delta = compute_weights(G)[1]
    return np.flatnonzero(delta / math.sqrt(G.n) * norms > rule.value).astype(np.int64)


def refit(S, G, J, singular="error"):
    """Least-squares covariance restricted to the columns ``J``.

    Returns ``(Psi_J, Sigma_J)`` with ``Psi_J = A^-1 G_J^T S G_J A^-1`` where
    ``A = G_J^T G_J``, and ``Sigma_J = G_J Psi_J G_J^T``.  An empty ``J``
    gives a zero covariance.

    When ``A`` is ill conditioned (for instance ``|J| > n``) the default
    raises SingularGramError; ``singular="pinv"`` uses the pseudo-inverse,
    so that ``Sigma_J = P S P`` with ``P`` the projector onto ``span(G_J)``.
    """
    G = _as_design(G)
    S = np.asarray(S, dtype=float)
    J = np.asarray(J, dtype=np.int64).ravel()
    if J.size == 0:
        return np.zeros((0, 0)), np.zeros((G.n, G.n))
    GJ = subset_columns(G, J).G
    A = GJ.T @ GJ
    cond = float(np.linalg.cond(A))
    inner = GJ.T @ S @ GJ
    if cond <= REFIT_COND_LIMIT:
        Psi = np.linalg.solve(A, np.linalg.solve(A, inner).T).T
    elif singular == "pinv":
        log.info("refit Gram condition number %.3e; using the pseudo-inverse", cond)
        A_pinv = np.linalg.pinv(A, rcond=1.0 / REFIT_COND_LIMIT, hermitian=True)
        Psi = A_pinv @ inner @ A_pinv
    else:
        raise SingularGramError(cond, REFIT_COND_LIMIT)
    Psi = _symmetrize(Psi)
    return Psi, _symmetrize(GJ @ Psi @ GJ.T)


def sparse_pca(Sigma_hat, k):
    """Top ``k`` eigenpairs in descending order.

    Each eigenvector has unit norm and its largest-magnitude entry positive.
    """
    Sigma_hat = _check_symmetric(Sigma_hat, "Sigma_hat", rtol=1e-8)
    n = Sigma_hat.shape[0]
    if int(k) != k or not 1 <= k <= n:
        raise ValidationError(f"k must be an integer in [1, {n}], got {k!r}")
    evals, evecs = np.linalg.eigh(_symmetrize(Sigma_hat))
    pairs = []
    for i in range(n - 1, n - 1 - int(k), -1):
        v = evecs[:, i] / np.linalg.norm(evecs[:, i])
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        pairs.append((float(evals[i]), v))
    return pairs


def estimate(X, G, cfg=None):
    """Run the full pipeline on samples ``X`` (``N x n``) with dictionary ``G``.

    ``lambda="auto"`` uses the MAD noise level in the default rule.  Columns
    of ``G`` that are zero at every design point are excluded from the solve.
    """
    cfg = EstimatorConfig() if cfg is None else cfg
    G = _as_design(G)
    X = as_samples(X)
    N, n = X.shape
    if n != G.n:
        raise ValidationError(f"samples have {n} points but the dictionary has {G.n} rows")
    S = empirical_covariance(X, center=cfg.center)
    sigma2 = mad_noise_estimate(X, cfg.noise_wavelet) if n >= 2 else float("nan")
    if cfg.lam == "auto":
        if n < 2:
            raise ValidationError("automatic lambda needs at least two points per sample")
        lam = default_lambda(sigma2, n, N, G.M, cfg.delta_conf)
    else:
        lam = cfg.lam
    # columns vanishing on the design have no weight and no effect on the
    # fit; they are left out of the solve and reported as zero
    live = np.flatnonzero(G.col_norms > 0)
    if live.size == 0:
        raise ValidationError("every dictionary column vanishes at the design points")
    G_live = G if live.size == G.M else subset_columns(G, live)
    sol = solve_group_lasso(S, G_live, lam, cfg)
    J_live = select_support(sol.Psi_hat, G_live, cfg.support_rule)
    Psi_refit, Sigma_refit = refit(S, G_live, J_live, cfg.refit)
    J = live[J_live]
    Psi = sol.Psi_hat
    if live.size < G.M:
        Psi = np.zeros((G.M, G.M))
        Psi[np.ix_(live, live)] = sol.Psi_hat
        sol = replace(sol, Psi_hat=Psi)
    # the unconstrained minimizer need not be symmetric; report it as solved
    Sigma_lambda = G.G @ Psi @ G.G.T
    if cfg.mode == "symmetric":
        Sigma_lambda = _symmetrize(Sigma_lambda)
    return EstimateReport(
        lambda_used=float(lam),
        sigma2_noise_hat=sigma2,
        Psi_hat=Psi,
        Sigma_lambda=Sigma_lambda,
        J_hat=J,
        Psi_refit=Psi_refit,
        Sigma_refit=Sigma_refit,
        column_norms=np.linalg.norm(Psi, axis=0),
        solver=sol,
        S_tilde=S,
    )
