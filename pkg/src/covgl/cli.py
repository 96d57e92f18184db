"""Command-line entry point: ``covgl estimate | simulate | diagnose | pca | export``.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
4 diagnostics budget refused.  ``COVGL_LOG`` sets the log level.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, io, simulation
from .dictionary import DesignPoints, build_dictionary
from .errors import BudgetExceededError, CovGLError, ReplicateError
from .estimator import EstimatorConfig, SupportRule, estimate, sparse_pca

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3
EXIT_BUDGET = 4

log = logging.getLogger("covgl")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _lambda_value(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda expects 'auto' or a number, got {text!r}") from None


def _support_value(text):
    try:
        return SupportRule.parse(text)
    except CovGLError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_estimator_flags(p):
    g = p.add_argument_group("estimator")
    g.add_argument("--lambda", dest="lam", type=_lambda_value, help="'auto' or a non-negative value")
    g.add_argument("--delta", type=float, help="confidence exponent of the automatic lambda (default 1.1)")
    g.add_argument("--mode", choices=("symmetric", "unconstrained"))
    g.add_argument("--support", type=_support_value, help="lcurve | epsilon=V | theory=V")
    g.add_argument("--max-iter", type=int)
    g.add_argument("--center", action="store_true", default=None, help="subtract the sample mean")
    g.add_argument("--refit", choices=("error", "pinv"), help="singular refit Gram: fail (default) or pseudo-inverse")


def _estimator_overrides(cfg, args):
    changes = {}
    for attr, key in (
        ("lam", "lam"),
        ("delta", "delta_conf"),
        ("mode", "mode"),
        ("support", "support_rule"),
        ("max_iter", "max_iter"),
        ("center", "center"),
        ("refit", "refit"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            changes[key] = value
    return cfg.with_options(**changes) if changes else cfg


def _out_dir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CovGLError(f"{out}: cannot create output directory ({exc.strerror})") from None
    return out


def _load_dictionary(path, n_rows):
    path = Path(path)
    spec, pts = io.parse_dictionary_document(io.read_json(path), path.parent)
    if pts is None and spec.kind == "custom" and spec.matrix.shape[0] != n_rows:
        raise CovGLError(
            f"{path}: custom dictionary has {spec.matrix.shape[0]} rows but samples have {n_rows} points"
        )
    if pts is None and spec.kind != "custom":
        pts = DesignPoints.equispaced(n_rows)
    return build_dictionary(spec, pts)


def cmd_estimate(args):
    X = io.read_matrix_csv(args.samples)
    G = _load_dictionary(args.dict, X.shape[1])
    cfg = _estimator_overrides(EstimatorConfig(), args)
    rep = estimate(X, G, cfg)
    out = _out_dir(args)
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "estimate",
        "N": X.shape[0],
        "n": X.shape[1],
        "M": G.M,
        "config": io.estimator_config_to_dict(cfg),
    }
    doc.update(rep.summary())
    io.write_json(out / "report.json", doc)
    io.write_matrix_csv(out / "sigma_lambda.csv", rep.Sigma_lambda)
    io.write_matrix_csv(out / "sigma_refit.csv", rep.Sigma_refit)
    if not rep.solver.converged:
        print(
            f"error: solver did not converge in {rep.solver.iterations} iterations "
            f"(primal {rep.solver.primal_residual:.3e}, dual {rep.solver.dual_residual:.3e})",
            file=sys.stderr,
        )
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(args):
    path = Path(args.scenario)
    cfg = io.parse_scenario(io.read_json(path), path.parent)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.replicates is not None:
        changes["P"] = args.replicates
    est = _estimator_overrides(cfg.estimator_cfg, args)
    if est is not cfg.estimator_cfg:
        changes["estimator_cfg"] = est
    if changes:
        cfg = cfg.with_options(**changes)
    out = _out_dir(args)
    scenario = simulation.build_scenario(cfg)
    _, G, truth = scenario
    summary = simulation.run_experiment(
        cfg, threads=args.threads, track_eigenvectors=args.track_eigenvectors, scenario=scenario
    )
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "simulate",
        "scenario": io.scenario_to_dict(cfg),
        "truth": {
            "s_star": truth.s_star,
            "J_star": truth.J_star,
            "Sigma_fro": truth.Sigma_fro,
            "Sigma_op": truth.Sigma_op,
            "Sigma_Jstar_op": truth.Sigma_Jstar_op,
        },
        "metrics": summary.to_dict(),
    }
    io.write_json(out / "metrics.json", doc)
    if args.replicates_csv:
        io.write_matrix_csv(out / "per_replicate.csv", summary.per_replicate)
    if args.plot_data:
        X = simulation.generate(cfg, truth, 0)
        rep = estimate(X, G, cfg.estimator_cfg)
        _, table = simulation.eigenvector_plot_data(truth, rep)
        io.write_matrix_csv(out / "eigenvectors.csv", table)
    if args.sweep:
        rows = simulation.design_size_sweep(cfg, args.sweep, threads=args.threads)
        io.write_matrix_csv(out / "sweep.csv", rows)
    if summary.nonconverged:
        print(
            f"error: solver did not converge in replicate(s) {summary.nonconverged}",
            file=sys.stderr,
        )
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_diagnose(args):
    G = io.read_matrix_csv(args.matrix)
    M = G.shape[1]
    s_values = args.s if args.s else list(range(1, min(3, M) + 1))
    report = diagnostics.diagnose(G, s_values, args.c0, budget=args.budget)
    out = _out_dir(args)
    doc = {"schema_version": io.SCHEMA_VERSION, "command": "diagnose", "n": G.shape[0], "M": M}
    doc.update(report.to_dict())
    io.write_json(out / "diagnostics.json", doc)
    return EXIT_OK


def cmd_pca(args):
    Sigma = io.read_matrix_csv(args.sigma)
    pairs = sparse_pca(Sigma, args.k)
    out = _out_dir(args)
    io.write_matrix_csv(out / "eigenpairs.csv", np.array([[val, *vec] for val, vec in pairs]))
    return EXIT_OK


def cmd_export(args):
    out = _out_dir(args)
    if args.what == "signal":
        pts = DesignPoints.equispaced(args.n)
        values = simulation.test_signal(args.kind, pts.points)
        if args.normalize:
            values = values / np.linalg.norm(values)
        io.write_matrix_csv(out / f"{args.kind}.csv", np.column_stack([pts.points, values]))
    else:
        path = Path(args.dict)
        spec, pts = io.parse_dictionary_document(io.read_json(path), path.parent)
        io.write_matrix_csv(out / "dictionary.csv", build_dictionary(spec, pts).G)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="covgl", description="Group-Lasso covariance estimation over dictionaries.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate a covariance from a samples CSV")
    p.add_argument("samples", help="N x n samples, one observation per row")
    p.add_argument("--dict", required=True, help="dictionary JSON")
    p.add_argument("--out", default=".", help="output directory")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    p.add_argument("scenario", help="scenario JSON")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--replicates", type=int, help="override P")
    p.add_argument("--threads", type=int, help="worker threads (default: available cores)")
    p.add_argument("--out", default=".")
    p.add_argument("--replicates-csv", action="store_true", help="write per_replicate.csv")
    p.add_argument("--plot-data", action="store_true", help="write eigenvectors.csv for replicate 0")
    p.add_argument("--track-eigenvectors", action="store_true", help="record eigenvector cosines")
    p.add_argument("--sweep", type=_int_list, help="design sizes for sweep.csv, e.g. 32,64,90,128")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="coherence and restricted eigenvalues of a matrix CSV")
    p.add_argument("matrix")
    p.add_argument("--s", type=_int_list, help="sparsity levels (default 1..3)")
    p.add_argument("--c0", type=_float_list, default=[1.0], help="c0 values (default 1)")
    p.add_argument("--budget", type=int, default=diagnostics.DEFAULT_BUDGET)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("pca", help="leading eigenpairs of a covariance CSV")
    p.add_argument("sigma")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("export", help="write a test signal or a dictionary matrix as CSV")
    p.add_argument("what", choices=("signal", "dictionary"))
    p.add_argument("--kind", choices=simulation.SIGNALS, default="heavisine")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--dict", help="dictionary JSON (for 'dictionary')")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_export)
    return parser


def _configure_logging(verbose):
    env = os.environ.get("COVGL_LOG", "").upper()
    level = getattr(logging, env, None) if env else None
    if not isinstance(level, int):
        level = logging.WARNING
    level = max(logging.DEBUG, level - 10 * verbose)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == "export" and args.what == "dictionary" and not args.dict:
        parser.error("export dictionary needs --dict")
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ReplicateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET if isinstance(exc.cause, BudgetExceededError) else EXIT_INPUT
    except CovGLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
