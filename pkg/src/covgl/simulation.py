"""Monte Carlo harness for the one- and two-factor signal models.

Observations are ``X_i(t_j) = sum_r a_ir f_r(t_j) + sigma eps_ij`` with
``a_ir ~ N(0, gamma_r^2)`` and standard normal ``eps``.  Sampled signals are
scaled to unit l2 norm so the true covariance is ``sum_r gamma_r^2 F_r F_r^T``.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import diagnostics
from .dictionary import BasisSpec, DesignPoints, build_dictionary, subset_columns
from .errors import (
    AssumptionViolatedError,
    CovGLError,
    ReplicateError,
    SingularGramError,
    ValidationError,
)
from .estimator import REFIT_COND_LIMIT, EstimatorConfig, estimate, sparse_pca

log = logging.getLogger(__name__)

BLOCKS_T = np.array([0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
BLOCKS_H = np.array([4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2])

# piecewise constant on dyadic intervals (sparse in Haar on dyadic grids)
STEPS_T = np.array([0.25, 0.5, 0.625, 0.75])
STEPS_H = np.array([1.0, -0.6, 0.8, -1.2, -0.2])

SIGNALS = ("heavisine", "blocks", "steps", "waves")
J_STAR_RTOL = 1e-8

# replicate streams: one for the factor coefficients, one for the noise
ROLE_COEFFS = 0
ROLE_NOISE = 1


def test_signal(kind, t):
    """Evaluate a named test function on ``t`` (scalar or array) in [0, 1].

    ``heavisine`` and ``blocks`` are the classical wavelet test signals (with
    ``sgn(0) = 0``).  ``steps`` is piecewise constant on the left-open dyadic
    intervals cut at 1/4, 1/2, 5/8, 3/4.  ``waves`` is
    ``sin(6 pi t) + cos(14 pi t) / 2``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise ValidationError("test signals are defined on [0, 1]")
    if kind == "heavisine":
        out = 4.0 * np.sin(4 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t)
    elif kind == "blocks":
        steps = (1.0 + np.sign(t[..., None] - BLOCKS_T)) / 2.0
        out = steps @ BLOCKS_H
    elif kind == "steps":
        out = STEPS_H[0] + (t[..., None] > STEPS_T).astype(float) @ np.diff(STEPS_H)
    elif kind == "waves":
        out = np.sin(6 * np.pi * t) + 0.5 * np.cos(14 * np.pi * t)
    else:
        raise ValidationError(f"unknown signal {kind!r}; expected one of {SIGNALS}")
    return out if out.ndim else float(out)


# keep pytest from collecting the function when tests import it by name
test_signal.__test__ = False


@dataclass(frozen=True)
class ScenarioConfig:
    """A generative scenario plus the estimator settings used on it.

    ``signals`` and ``gammas`` have one entry (model one) or two (model two,
    with ``gammas[0] > gammas[1]``).  A signal is a name from ``SIGNALS`` or
    an explicit vector of values at the ``n`` design points.
    """

    signals: tuple
    gammas: tuple
    sigma: float
    n: int
    N: int
    P: int
    dictionary: BasisSpec
    design: str = "equispaced"
    design_seed: int | None = None
    base_seed: int = 0
    estimator_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        signals = tuple(
            s if isinstance(s, str) else np.asarray(s, dtype=float) for s in self.signals
        )
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if len(signals) not in (1, 2) or len(self.gammas) != len(signals):
            raise ValidationError("scenario needs one or two (signal, gamma) pairs")
        for s in signals:
            if isinstance(s, str):
                if s not in SIGNALS:
                    raise ValidationError(f"unknown signal {s!r}; expected one of {SIGNALS}")
            elif s.shape != (self.n,) or not np.all(np.isfinite(s)):
                raise ValidationError(f"custom signal must be {self.n} finite values")
        if any(g < 0 or not math.isfinite(g) for g in self.gammas):
            raise ValidationError("gamma must be finite and non-negative")
        if len(self.gammas) == 2 and not self.gammas[0] > self.gammas[1]:
            raise ValidationError("model two requires gamma1 > gamma2")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValidationError("sigma must be finite and non-negative")
        for name in ("n", "N", "P"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.design not in ("equispaced", "permuted_subset"):
            raise ValidationError(f"unknown design {self.design!r}")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise ValidationError("base_seed must be a non-negative integer")
        if not isinstance(self.dictionary, BasisSpec):
            raise ValidationError("dictionary must be a BasisSpec")

    @property
    def model(self):
        return "one" if len(self.signals) == 1 else "two"

    @property
    def M(self):
        return self.dictionary.size

    @property
    def grid_size(self):
        spec = self.dictionary
        if spec.kind == "mixed":
            return spec.children[0].size
        if spec.kind == "custom":
            return spec.matrix.shape[0]
        return spec.size

    def design_points(self):
        if self.design == "equispaced":
            return DesignPoints.equispaced(self.n)
        seed = self.base_seed if self.design_seed is None else self.design_seed
        return DesignPoints.permuted_subset(self.grid_size, self.n, seed)

    def with_options(self, **changes):
        return replace(self, **changes)


@dataclass
class TruthBundle:
    points: np.ndarray
    signals: tuple
    gammas: tuple
    Sigma: np.ndarray
    beta: np.ndarray
    Psi_star: np.ndarray
    J_star: np.ndarray
    Sigma_Jstar: np.ndarray
    sigma2: float
    Sigma_fro: float = 0.0
    Sigma_op: float = 0.0
    Sigma_Jstar_op: float = 0.0

    @property
    def F(self):
        return self.signals[0]

    @property
    def F2(self):
        return self.signals[1] if len(self.signals) > 1 else None

    @property
    def s_star(self):
        return int(self.J_star.size)

    @property
    def Sigma_noise_norm(self):
        return self.sigma2


@dataclass
class MetricsSummary:
    EAFN: float
    EAON: float
    EAON_star: float
    per_replicate: np.ndarray
    P: int
    seeds: list
    support_sizes: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    nonconverged: list = field(default_factory=list)
    cosines: dict = field(default_factory=dict)
    refit_frobenius: list = field(default_factory=list)

    def to_dict(self):
        out = {
            "EAFN": self.EAFN,
            "EAON": self.EAON,
            "EAON_star": self.EAON_star,
            "P": self.P,
            "seeds": [list(s) for s in self.seeds],
            "per_replicate": [[float(v) for v in row] for row in self.per_replicate],
            "support_sizes": list(self.support_sizes),
            "lambdas": list(self.lambdas),
            "nonconverged_replicates": list(self.nonconverged),
            "refit_frobenius": list(self.refit_frobenius),
        }
        if self.cosines:
            out["cosines"] = {k: v.tolist() for k, v in self.cosines.items()}
        return out


def replicate_rng(base_seed, replicate, role):
    """Counter-based generator for one (replicate, role) substream."""
    ss = np.random.SeedSequence([int(base_seed), int(replicate), int(role)])
    return np.random.Generator(np.random.Philox(ss))


def _sample_signals(cfg, pts):
    vectors = []
    for s in cfg.signals:
        v = test_signal(s, pts.points) if isinstance(s, str) else np.array(s)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("signal vanishes at every design point")
        vectors.append(v / norm)
    if len(vectors) == 2:
        f1, f2 = vectors
        f2 = f2 - (f1 @ f2) * f1
        norm = np.linalg.norm(f2)
        if norm <= 1e-12:
            raise ValidationError("the two signals are collinear at the design points")
        vectors[1] = f2 / norm
    return tuple(vectors)


def _basis_pursuit(G, F):
    # min ||b||_1 s.t. G b = F, as an LP over b = u - v with u, v >= 0
    M = G.shape[1]
    res = optimize.linprog(
        np.ones(2 * M),
        A_eq=np.hstack([G, -G]),
        b_eq=F,
        bounds=(0, None),
        method="highs-ds",
    )
    if res.status != 0:
        raise ValidationError(f"sparse coefficient search failed: {res.message}")
    return res.x[:M] - res.x[M:]


def dictionary_coefficients(G, F):
    """Coefficients ``beta`` with ``G beta ~= F``.

    Uses least squares when ``G`` has full column rank (the coefficients are
    then unique) and the minimum-l1 exact representation otherwise, which
    has at most ``n`` nonzeros with linearly independent columns.
    """
    Gm = G.G
    if G.M <= G.n and np.linalg.matrix_rank(Gm) == G.M:
        return np.linalg.lstsq(Gm, F, rcond=None)[0]
    beta = _basis_pursuit(Gm, F)
    # polish on the found support so the representation is exact to rounding
    J = np.flatnonzero(np.abs(beta) > J_STAR_RTOL * np.abs(beta).max())
    beta_J = np.linalg.lstsq(Gm[:, J], F, rcond=None)[0]
    beta = np.zeros(G.M)
    beta[J] = beta_J
    return beta


def _projector(G, J):
    GJ = subset_columns(G, J).G
    A = GJ.T @ GJ
    cond = float(np.linalg.cond(A))
    if not cond <= REFIT_COND_LIMIT:
        raise SingularGramError(cond, REFIT_COND_LIMIT)
    P = GJ @ np.linalg.solve(A, GJ.T)
    return 0.5 * (P + P.T)


def make_truth(cfg, G, pts=None):
    """Ground truth for ``cfg`` on dictionary ``G`` at design ``pts``."""
    pts = cfg.design_points() if pts is None else pts
    if pts.n != G.n:
        raise ValidationError(f"design has {pts.n} points but the dictionary has {G.n} rows")
    signals = _sample_signals(cfg, pts)
    n = G.n
    Sigma = np.zeros((n, n))
    Psi_star = np.zeros((G.M, G.M))
    betas = []
    for f, g in zip(signals, cfg.gammas):
        Sigma += g**2 * np.outer(f, f)
        b = dictionary_coefficients(G, f)
        betas.append(b)
        Psi_star += g**2 * np.outer(b, b)
    Sigma = 0.5 * (Sigma + Sigma.T)
    beta = np.array(betas)
    mask = np.zeros(G.M, dtype=bool)
    for b in betas:
        mask |= np.abs(b) > J_STAR_RTOL * np.abs(b).max()
    J_star = np.flatnonzero(mask)
    sigma2 = float(cfg.sigma) ** 2
    Sigma_J = Sigma + sigma2 * _projector(G, J_star) if sigma2 > 0 else Sigma.copy()
    Sigma_J = 0.5 * (Sigma_J + Sigma_J.T)
    return TruthBundle(
        points=pts.points,
        signals=signals,
        gammas=cfg.gammas,
        Sigma=Sigma,
        beta=beta,
        Psi_star=Psi_star,
        J_star=J_star,
        Sigma_Jstar=Sigma_J,
        sigma2=sigma2,
        Sigma_fro=float(np.linalg.norm(Sigma)),
        Sigma_op=diagnostics.operator_norm(Sigma),
        Sigma_Jstar_op=diagnostics.operator_norm(Sigma_J),
    )


def build_scenario(cfg):
    """Design points, dictionary and truth for ``cfg``."""
    pts = cfg.design_points()
    G = build_dictionary(cfg.dictionary, pts)
    if G.M != cfg.M:
        raise ValidationError("dictionary size disagrees with the scenario")
    return pts, G, make_truth(cfg, G, pts)


def generate(cfg, truth, replicate_index, return_clean=False):
    """Draw the ``N x n`` noisy sample for one replicate.

    The coefficients and the noise come from separate substreams keyed by
    ``(base_seed, replicate_index, role)``, so a replicate is reproducible
    on its own.  With ``return_clean`` the noiseless sample is returned too.
    """
    coeff_rng = replicate_rng(cfg.base_seed, replicate_index, ROLE_COEFFS)
    noise_rng = replicate_rng(cfg.base_seed, replicate_index, ROLE_NOISE)
    F = np.array(truth.signals)  # (r, n)
    a = coeff_rng.standard_normal((cfg.N, F.shape[0])) * np.array(truth.gammas)
    clean = a @ F
    X = clean + cfg.sigma * noise_rng.standard_normal((cfg.N, F.shape[1]))
    return (X, clean) if return_clean else X


def epsilon_constant(epsilon):
    """``8 eps / (1 + eps) * (1 + 2 / eps)^2``."""
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    return 8.0 * epsilon / (1.0 + epsilon) * (1.0 + 2.0 / epsilon) ** 2


def theory_constants(epsilon, truth, G, S, lam, s=None, budget=diagnostics.DEFAULT_BUDGET):
    """Return ``(C_eps, C0, C1)`` for sparsity ``s`` (default ``s*``).

    ``S`` is the noiseless sample covariance; the bias term uses the true
    dictionary coefficients ``truth.Psi_star``.  The compatibility constant
    is evaluated at ``c0 = 3 + 4 / epsilon``.

    Raises
    ------
    AssumptionViolatedError
        If the coherence condition fails, so the constant is undefined.
    """
    c_eps = epsilon_constant(epsilon)
    s = truth.s_star if s is None else int(s)
    if s < 1:
        raise ValidationError("sparsity must be at least one")
    c0 = 3.0 + 4.0 / epsilon
    k = diagnostics.kappa(G, s, c0, budget)
    if k == diagnostics.VIOLATED:
        raise AssumptionViolatedError(f"coherence condition fails at s={s}, c0={c0:g}")
    n = G.n
    bias = float(np.sum((S - G.G @ truth.Psi_star @ G.G.T) ** 2))
    C0 = (1.0 + epsilon) * (
        8.0 / n * bias + c_eps * G.G_max**2 * G.rho_max_gram / k**2 * lam**2 * s / n
    )
    C1 = 4.0 * (1.0 + epsilon) * math.sqrt(s) / (epsilon * k) * math.sqrt(C0)
    return c_eps, C0, C1


def abs_cosine(u, v):
    return float(abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def _top_vectors(A, k):
    # unconstrained-mode estimates may be slightly asymmetric
    return [v for _, v in sparse_pca(0.5 * (A + A.T), k)]


def replicate_metrics(truth, report):
    """``(||Sigma_lam - Sigma||_F, ||Sigma_J - Sigma||_2, ||Sigma_J - Sigma_J*||_2)``."""
    eafn = float(np.linalg.norm(report.Sigma_lambda - truth.Sigma))
    if report.J_hat.size == 0:
        # zero estimate: the distances are the norms of the targets themselves
        return eafn, truth.Sigma_op, truth.Sigma_Jstar_op
    eaon = diagnostics.operator_norm(report.Sigma_refit - truth.Sigma)
    eaon_star = diagnostics.operator_norm(report.Sigma_refit - truth.Sigma_Jstar)
    return eafn, eaon, eaon_star


def _default_threads():
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def run_experiment(cfg, threads=None, track_eigenvectors=False, scenario=None):
    """Run ``cfg.P`` replicates and average the three error norms.

    Replicates run on a thread pool of size ``threads`` (default: available
    cores); results are collected in replicate order, so the summary does not
    depend on scheduling.  With ``track_eigenvectors`` the absolute cosines
    between the top eigenvectors of the refit estimate, the penalized
    estimate and the raw sample covariance and the true signals are recorded
    as ``cosines["refit" | "lambda" | "raw"]`` arrays of shape ``(P, r)``.
    ``refit_frobenius`` holds ``||Sigma_J - Sigma||_F`` per replicate.
    """
    pts, G, truth = build_scenario(cfg) if scenario is None else scenario
    r = len(truth.signals)
    est_cfg = cfg.estimator_cfg

    def one(p):
        try:
            X = generate(cfg, truth, p)
            rep = estimate(X, G, est_cfg)
            row = replicate_metrics(truth, rep)
            cos = None
            if track_eigenvectors:
                cos = []
                for A in (rep.Sigma_refit, rep.Sigma_lambda, rep.S_tilde):
                    vecs = _top_vectors(A, r)
                    cos.append([abs_cosine(v, f) for v, f in zip(vecs, truth.signals)])
            refit_fro = float(np.linalg.norm(rep.Sigma_refit - truth.Sigma))
            return row, rep.J_hat.size, rep.lambda_used, rep.solver.converged, cos, refit_fro
        except CovGLError as exc:
            raise ReplicateError(p, exc) from exc
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ReplicateError(p, exc) from exc

    threads = _default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValidationError("threads must be at least 1")
    if threads == 1:
        results = [one(p) for p in range(cfg.P)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(cfg.P)))

    rows = np.array([res[0] for res in results])
    means = rows.mean(axis=0)
    summary = MetricsSummary(
        EAFN=float(means[0]),
        EAON=float(means[1]),
        EAON_star=float(means[2]),
        per_replicate=rows,
        P=cfg.P,
        seeds=[(cfg.base_seed, p) for p in range(cfg.P)],
        support_sizes=[int(res[1]) for res in results],
        lambdas=[float(res[2]) for res in results],
        nonconverged=[p for p, res in enumerate(results) if not res[3]],
        refit_frobenius=[res[5] for res in results],
    )
    if track_eigenvectors:
        for i, key in enumerate(("refit", "lambda", "raw")):
            summary.cosines[key] = np.array([res[4][i] for res in results])
    if summary.nonconverged:
        log.warning("%d replicate(s) did not converge", len(summary.nonconverged))
    return summary


def eigenvector_plot_data(truth, report, k=None):
    """Columns ``t, F_r, raw_r, lambda_r, refit_r`` for each true signal.

    Estimated eigenvectors are sign-aligned with the signal they estimate.
    """
    r = len(truth.signals) if k is None else k
    cols = [truth.points]
    names = ["t"]
    estimates = {
        "raw": _top_vectors(report.S_tilde, r),
        "lambda": _top_vectors(report.Sigma_lambda, r),
        "refit": _top_vectors(report.Sigma_refit, r),
    }
    for i, f in enumerate(truth.signals[:r]):
        cols.append(f)
        names.append(f"F{i + 1}")
        for key, vecs in estimates.items():
            v = vecs[i]
            cols.append(v if v @ f >= 0 else -v)
            names.append(f"{key}{i + 1}")
    return names, np.column_stack(cols)


def design_size_sweep(cfg, n_values, threads=None):
    """Metrics for each design size, reusing one seeded grid permutation.

    Every ``n`` takes the first ``n`` points of the same permutation, so the
    designs are nested.  Returns rows ``(n, EAFN, EAON, EAON*)``.
    """
    rows = []
    for n in n_values:
        sub = cfg.with_options(n=int(n), design="permuted_subset")
        m = run_experiment(sub, threads=threads)
        rows.append((int(n), m.EAFN, m.EAON, m.EAON_star))
    return np.array(rows, dtype=float)


__all__ = [
    "ScenarioConfig",
    "TruthBundle",
    "MetricsSummary",
    "test_signal",
    "make_truth",
    "build_scenario",
    "generate",
    "theory_constants",
    "epsilon_constant",
    "run_experiment",
    "replicate_metrics",
    "eigenvector_plot_data",
    "design_size_sweep",
    "dictionary_coefficients",
    "replicate_rng",
]
