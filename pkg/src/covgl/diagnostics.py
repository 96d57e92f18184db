"""Dictionary quality measures: coherence, restricted eigenvalues, kappa.

Restricted minimal eigenvalues are exact infima over column subsets.  They are
computed by exhaustive enumeration, and the enumeration refuses to start when
the number of subsets is larger than a budget.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dictionary import DesignMatrix
from .errors import BudgetExceededError, ValidationError

DEFAULT_BUDGET = 2_000_000
VIOLATED = "violated"
EIG_TOL = 1e-10
POWER_ITERATION_THRESHOLD = 1024

# subsets per batched eigvalsh call
_CHUNK = 8192


def _as_design(G):
    return G if isinstance(G, DesignMatrix) else DesignMatrix(G)


def mutual_coherence(G):
    """Largest absolute inner product between two distinct columns."""
    G = _as_design(G)
    if G.M < 2:
        raise ValidationError("mutual coherence needs at least two columns")
    gram = np.abs(G.gram())
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def count_subsets(M, s):
    """Number of non-empty column subsets of size at most ``s``."""
    return sum(math.comb(M, k) for k in range(1, s + 1))


def _is_diagonal_gram(G):
    gram = G.gram()
    off = gram - np.diag(np.diag(gram))
    return np.abs(off).max() <= 1e-12 * max(G.G_max**2, 1.0)


def rho_min_restricted(G, s, budget=DEFAULT_BUDGET, return_count=False):
    """Smallest eigenvalue of ``G_J^T G_J`` over all subsets with ``|J| <= s``.

    Parameters
    ----------
    G : DesignMatrix or array_like
        Dictionary matrix, ``n x M``.
    s : int
        Maximal subset size, ``1 <= s <= M``.
    budget : int
        Maximal number of subsets to enumerate.
    return_count : bool
        Also return the number of subsets actually enumerated.

    Raises
    ------
    BudgetExceededError
        If enumeration would visit more than ``budget`` subsets.

    Notes
    -----
    A diagonal Gram matrix (mutually orthogonal columns) has a closed-form
    infimum, ``min_k ||G_k||^2``, and skips enumeration entirely.
    """
    G = _as_design(G)
    M = G.M
    if int(s) != s or not 1 <= s <= M:
        raise ValidationError(f"s must be an integer in [1, {M}], got {s!r}")
    s = int(s)
    if _is_diagonal_gram(G):
        value = float(np.min(G.col_norms**2))
        return (value, 0) if return_count else value
    total = count_subsets(M, s)
    if total > budget:
        raise BudgetExceededError(total, budget)
    gram = G.gram()
    best = np.inf
    for k in range(1, s + 1):
        combos = itertools.combinations(range(M), k)
        while True:
            chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64)
            if chunk.size == 0:
                break
            sub = gram[chunk[:, :, None], chunk[:, None, :]]
            best = min(best, float(np.linalg.eigvalsh(sub)[:, 0].min()))
    return (best, total) if return_count else best


def kappa_squared(G, s, c0, budget=DEFAULT_BUDGET):
    """``rho_min(s)^2 - c0 * theta(G) * rho_max(G^T G) * s`` (may be negative)."""
    G = _as_design(G)
    if not c0 > 0:
        raise ValidationError(f"c0 must be positive, got {c0!r}")
    rho = rho_min_restricted(G, s, budget)
    return rho**2 - c0 * mutual_coherence(G) * G.rho_max_gram * s


def kappa(G, s, c0, budget=DEFAULT_BUDGET):
    """Compatibility constant, or ``VIOLATED`` when its square is not positive."""
    k2 = kappa_squared(G, s, c0, budget)
    return math.sqrt(k2) if k2 > 0 else VIOLATED


def check_assumption1(G, s, c0, budget=DEFAULT_BUDGET):
    """True iff ``theta(G) < rho_min(s)^2 / (c0 rho_max(G^T G) s)``."""
    G = _as_design(G)
    if not c0 > 0:
        raise ValidationError(f"c0 must be positive, got {c0!r}")
    rho = rho_min_restricted(G, s, budget)
    return bool(mutual_coherence(G) < rho**2 / (c0 * G.rho_max_gram * s))


def sparsity(Psi, tol=0.0):
    """Number of columns of ``Psi`` whose l2 norm exceeds ``tol``."""
    Psi = np.asarray(Psi, dtype=float)
    if Psi.ndim != 2 or Psi.shape[0] != Psi.shape[1]:
        raise ValidationError("sparsity expects a square matrix")
    return int(np.count_nonzero(np.linalg.norm(Psi, axis=0) > tol))


def _power_iteration(A, tol=EIG_TOL, max_iter=100_000):
    n = A.shape[0]
    v = np.ones(n) + np.linspace(0.0, 1.0, n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est


def operator_norm(A):
    """Largest absolute eigenvalue of the symmetric matrix ``A``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("operator norm expects a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    if A.size == 0:
        return 0.0
    scale = max(np.abs(A).max(), 1.0)
    if np.abs(A - A.T).max() > 1e-8 * scale:
        raise ValidationError("operator norm expects a symmetric matrix")
    if A.shape[0] <= POWER_ITERATION_THRESHOLD:
        return float(np.abs(np.linalg.eigvalsh(A)).max())
    return _power_iteration(A)


@dataclass
class DiagnosticsReport:
    theta: float
    rho_max_gram: float
    rho_min_s: dict = field(default_factory=dict)
    kappa: dict = field(default_factory=dict)
    kappa_squared: dict = field(default_factory=dict)
    assumption1: dict = field(default_factory=dict)
    subsets_enumerated: int = 0

    def to_dict(self):
        def key(pair):
            return f"s={pair[0]},c0={pair[1]:g}"

        return {
            "theta": self.theta,
            "rho_max_gram": self.rho_max_gram,
            "rho_min_s": {str(s): v for s, v in sorted(self.rho_min_s.items())},
            "kappa": {key(p): v for p, v in self.kappa.items()},
            "kappa_squared": {key(p): v for p, v in self.kappa_squared.items()},
            "assumption1": {key(p): v for p, v in self.assumption1.items()},
            "subsets_enumerated": self.subsets_enumerated,
        }


def diagnose(G, s_values, c0_values, budget=DEFAULT_BUDGET):
    """Evaluate every quantity above for each ``s`` and ``(s, c0)`` pair."""
    G = _as_design(G)
    theta = mutual_coherence(G)
    report = DiagnosticsReport(theta=theta, rho_max_gram=G.rho_max_gram)
    for s in sorted(set(int(v) for v in s_values)):
        rho, count = rho_min_restricted(G, s, budget, return_count=True)
        report.rho_min_s[s] = rho
        report.subsets_enumerated += count
        for c0 in c0_values:
            if not c0 > 0:
                raise ValidationError(f"c0 must be positive, got {c0!r}")
            k2 = rho**2 - c0 * theta * G.rho_max_gram * s
            report.kappa_squared[(s, c0)] = k2
            report.kappa[(s, c0)] = math.sqrt(k2) if k2 > 0 else VIOLATED
            report.assumption1[(s, c0)] = bool(theta < rho**2 / (c0 * G.rho_max_gram * s))
    return report
