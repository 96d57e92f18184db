"""File formats: headerless CSV matrices and JSON configuration documents."""

import json
import math
from pathlib import Path

import numpy as np

from .dictionary import BasisSpec, DesignPoints
from .errors import ValidationError
from .estimator import EstimatorConfig, SupportRule

SCHEMA_VERSION = 1
SCHEMA_DIR = Path(__file__).with_name("schemas")


def format_number(x):
    """17 significant digits: round-trips every double exactly."""
    return "%.17g" % x


def write_matrix_csv(path, A):
    # adding zero turns -0.0 into 0.0
    A = np.asarray(A, dtype=float) + 0.0
    if A.ndim == 1:
        A = A[None, :]
    lines = [",".join(format_number(v) for v in row) for row in A]
    with open(path, "w", newline="") as fh:
        fh.write("".join(line + "\n" for line in lines))


def read_matrix_csv(path):
    """Read a comma-separated numeric matrix with one row per line.

    Trailing blank lines are ignored.  Errors name the path, line and column
    (both 1-based).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file") from None
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from None
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValidationError(f"{path}: empty matrix file")
    rows = []
    width = None
    for lineno, line in enumerate(lines, 1):
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ValidationError(
                f"{path}: line {lineno}: expected {width} columns, found {len(fields)}"
            )
        row = []
        for col, field in enumerate(fields, 1):
            try:
                value = float(field)
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}, column {col}: cannot parse {field.strip()!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise ValidationError(f"{path}: line {lineno}, column {col}: non-finite value")
            row.append(value)
        rows.append(row)
    return np.array(rows, dtype=float)


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file") from None
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    return obj[key]


def _check_version(obj, where):
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{where}: unsupported schema_version {version!r}")


def parse_basis_spec(obj, base_dir=".", where="dictionary"):
    """BasisSpec from ``{"kind": ..., "size": ...}``.

    ``mixed`` takes ``"children"``; ``custom`` takes an inline ``"matrix"``
    or a ``"matrix_csv"`` path relative to ``base_dir``.
    """
    kind = _require(obj, "kind", where)
    if kind == "mixed":
        children = _require(obj, "children", where)
        if not isinstance(children, list):
            raise ValidationError(f"{where}.children: expected a list")
        return BasisSpec(
            "mixed",
            children=tuple(
                parse_basis_spec(c, base_dir, f"{where}.children[{i}]") for i, c in enumerate(children)
            ),
        )
    if kind == "custom":
        if "matrix" in obj:
            try:
                mat = np.array(obj["matrix"], dtype=float)
            except (TypeError, ValueError):
                raise ValidationError(f"{where}.matrix: expected a numeric 2-D array") from None
        else:
            mat = read_matrix_csv(Path(base_dir) / _require(obj, "matrix_csv", where))
        return BasisSpec("custom", matrix=mat)
    size = _require(obj, "size", where)
    if isinstance(size, bool) or not isinstance(size, int):
        raise ValidationError(f"{where}.size: expected an integer")
    return BasisSpec(kind, size)


def basis_spec_to_dict(spec):
    if spec.kind == "mixed":
        return {"kind": "mixed", "children": [basis_spec_to_dict(c) for c in spec.children]}
    if spec.kind == "custom":
        return {"kind": "custom", "matrix": spec.matrix.tolist()}
    return {"kind": spec.kind, "size": spec.size}


def parse_design(obj, default_n, where="design"):
    """DesignPoints from a design description.

    Accepted forms: ``"equispaced"``, ``{"kind": "equispaced", "n": n}``,
    ``{"kind": "permuted_subset", "grid_size": M, "n": n, "seed": s}``,
    ``{"kind": "grid", "grid_size": M, "indices": [...]}`` (0-based) and
    ``{"kind": "points", "points": [...]}``.
    """
    if obj is None or obj == "equispaced":
        return DesignPoints.equispaced(default_n)
    kind = _require(obj, "kind", where)
    if kind == "equispaced":
        return DesignPoints.equispaced(int(obj.get("n", default_n)))
    if kind == "permuted_subset":
        return DesignPoints.permuted_subset(
            int(obj.get("grid_size", default_n)), int(_require(obj, "n", where)), int(obj.get("seed", 0))
        )
    if kind == "grid":
        return DesignPoints.from_grid(
            int(obj.get("grid_size", default_n)), np.asarray(_require(obj, "indices", where), dtype=np.int64)
        )
    if kind == "points":
        return DesignPoints(np.asarray(_require(obj, "points", where), dtype=float))
    raise ValidationError(f"{where}: unknown design kind {kind!r}")


def parse_dictionary_document(obj, base_dir="."):
    """``(BasisSpec, DesignPoints or None)`` from a dictionary JSON document."""
    _check_version(obj, "dictionary")
    spec = parse_basis_spec(obj, base_dir)
    design = obj.get("design")
    if design is None:
        return spec, None
    if spec.kind == "mixed":
        n = spec.children[0].size
    elif spec.kind == "custom":
        n = spec.matrix.shape[0]
    else:
        n = spec.size
    return spec, parse_design(design, n)


_ESTIMATOR_FIELDS = {
    "lambda": "lam",
    "delta": "delta_conf",
    "mode": "mode",
    "tol_primal": "tol_primal",
    "tol_dual": "tol_dual",
    "tol_kkt": "tol_kkt",
    "max_iter": "max_iter",
    "support": "support_rule",
    "noise_wavelet": "noise_wavelet",
    "center": "center",
    "rho0": "rho0",
    "refit": "refit",
}


def parse_estimator_config(obj, where="estimator"):
    if obj is None:
        return EstimatorConfig()
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    unknown = set(obj) - set(_ESTIMATOR_FIELDS)
    if unknown:
        raise ValidationError(f"{where}: unknown field(s) {sorted(unknown)}")
    kwargs = {_ESTIMATOR_FIELDS[k]: v for k, v in obj.items()}
    if "support_rule" in kwargs:
        kwargs["support_rule"] = SupportRule.parse(kwargs["support_rule"])
    try:
        return EstimatorConfig(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def estimator_config_to_dict(cfg):
    return {
        "lambda": cfg.lam,
        "delta": cfg.delta_conf,
        "mode": cfg.mode,
        "tol_primal": cfg.tol_primal,
        "tol_dual": cfg.tol_dual,
        "tol_kkt": cfg.tol_kkt,
        "max_iter": cfg.max_iter,
        "support": str(cfg.support_rule),
        "noise_wavelet": cfg.noise_wavelet,
        "center": cfg.center,
        "rho0": cfg.rho0,
        "refit": cfg.refit,
    }


def parse_scenario(obj, base_dir="."):
    """ScenarioConfig from a scenario JSON document.

    Model one uses ``signal``/``gamma``; model two uses ``signal1``,
    ``gamma1``, ``signal2``, ``gamma2``.  ``M`` is optional and, when given,
    must match the dictionary size.
    """
    from .simulation import ScenarioConfig

    _check_version(obj, "scenario")
    model = obj.get("model", "one")
    if model == "one":
        signals = (_require(obj, "signal", "scenario"),)
        gammas = (_require(obj, "gamma", "scenario"),)
    elif model == "two":
        signals = (_require(obj, "signal1", "scenario"), _require(obj, "signal2", "scenario"))
        gammas = (_require(obj, "gamma1", "scenario"), _require(obj, "gamma2", "scenario"))
    else:
        raise ValidationError(f"scenario: unknown model {model!r}")
    spec = parse_basis_spec(_require(obj, "dictionary", "scenario"), base_dir, "scenario.dictionary")
    if "M" in obj and obj["M"] != spec.size:
        raise ValidationError(f"scenario: M={obj['M']} but the dictionary has {spec.size} functions")
    design = obj.get("design", "equispaced")
    design_seed = None
    if isinstance(design, dict):
        design_seed = design.get("seed")
        design = _require(design, "kind", "scenario.design")
    for key in ("n", "N", "P"):
        value = _require(obj, key, "scenario")
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"scenario.{key}: expected an integer")
    return ScenarioConfig(
        signals=signals,
        gammas=gammas,
        sigma=float(_require(obj, "sigma", "scenario")),
        n=obj["n"],
        N=obj["N"],
        P=obj["P"],
        dictionary=spec,
        design=design,
        design_seed=design_seed,
        base_seed=obj.get("base_seed", 0),
        estimator_cfg=parse_estimator_config(obj.get("estimator")),
    )


def scenario_to_dict(cfg):
    def sig(s):
        return s if isinstance(s, str) else s.tolist()

    out = {"schema_version": SCHEMA_VERSION, "model": cfg.model}
    if cfg.model == "one":
        out.update(signal=sig(cfg.signals[0]), gamma=cfg.gammas[0])
    else:
        out.update(
            signal1=sig(cfg.signals[0]),
            gamma1=cfg.gammas[0],
            signal2=sig(cfg.signals[1]),
            gamma2=cfg.gammas[1],
        )
    design = {"kind": cfg.design}
    if cfg.design == "permuted_subset":
        design["seed"] = cfg.base_seed if cfg.design_seed is None else cfg.design_seed
    out.update(
        sigma=cfg.sigma,
        n=cfg.n,
        M=cfg.M,
        N=cfg.N,
        P=cfg.P,
        dictionary=basis_spec_to_dict(cfg.dictionary),
        design=design,
        base_seed=cfg.base_seed,
        estimator=estimator_config_to_dict(cfg.estimator_cfg),
    )
    return out
