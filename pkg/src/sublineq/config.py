"""JSON problem configuration: strict schema, builders for every block.

Unknown keys are rejected before any computation. All randomness used by point
samplers derives from the single top-level seed through numpy's PCG64, so the
same config file reproduces the same instances bit for bit.
"""

import csv
import json

import numpy as np

from .errors import ConfigurationError
from .kernels import green_ball_kernel, matrix_kernel, modify, riesz_kernel
from .measures import from_atoms, from_density, grid_ball, grid_box
from .potentials import BoundaryData
from .solver import Problem, SolverOptions

__all__ = ["load_config", "parse_config", "build_problem", "build_kernel", "build_measure"]


def _check_keys(cfg, allowed, where):
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def _require(cfg, keys, where):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigurationError(f"missing key(s) {missing} in {where}")


def load_config(path):
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"config is not valid JSON: {err}") from err
    return parse_config(cfg)


def parse_config(cfg):
    _check_keys(cfg, {"problem", "solver", "seed", "output", "kato", "intrinsic"}, "config root")
    _require(cfg, ["problem"], "config root")
    seed = int(cfg.get("seed", 0))
    out = cfg.get("output", {})
    _check_keys(out, {"dir"}, "output")
    return {
        "problem_cfg": cfg["problem"],
        "solver_cfg": cfg.get("solver", {}),
        "seed": seed,
        "output_dir": out.get("dir"),
        "kato_cfg": cfg.get("kato", {}),
        "intrinsic_cfg": cfg.get("intrinsic", {}),
    }


def build_kernel(cfg):
    _check_keys(cfg, {"type", "n", "alpha", "center", "radius", "points", "values",
                      "points_csv", "values_csv", "base", "modifier",
                      "wmp_constant", "qm_constant"}, "kernel")
    _require(cfg, ["type"], "kernel")
    t = cfg["type"]
    if t == "riesz":
        _require(cfg, ["n", "alpha"], "riesz kernel")
        kernel = riesz_kernel(int(cfg["n"]), float(cfg["alpha"]))
    elif t == "green_ball":
        _require(cfg, ["n"], "green_ball kernel")
        n = int(cfg["n"])
        center = cfg.get("center", [0.0] * n)
        kernel = green_ball_kernel(n, center, float(cfg.get("radius", 1.0)))
    elif t == "matrix":
        if "points_csv" in cfg:
            points = _read_csv(cfg["points_csv"])
        else:
            _require(cfg, ["points"], "matrix kernel")
            points = np.asarray(cfg["points"], float)
        if "values_csv" in cfg:
            values = _read_csv(cfg["values_csv"])
        else:
            _require(cfg, ["values"], "matrix kernel")
            values = np.asarray(cfg["values"], float)
        kernel = matrix_kernel(points, values)
    elif t == "modified":
        _require(cfg, ["base", "modifier"], "modified kernel")
        base = build_kernel(cfg["base"])
        kernel = modify(base, build_modifier(cfg["modifier"], base))
    else:
        raise ConfigurationError(
            f"unknown kernel type {t!r} (expected riesz | green_ball | matrix | modified)")
    # user-supplied structural constants (required for matrix/modified kernels to solve)
    if "wmp_constant" in cfg:
        kernel.wmp_constant = float(cfg["wmp_constant"])
    if "qm_constant" in cfg:
        kernel.qm_constant = float(cfg["qm_constant"])
    return kernel


def build_modifier(cfg, kernel):
    _check_keys(cfg, {"name", "value"}, "modifier")
    _require(cfg, ["name"], "modifier")
    if cfg["name"] == "constant":
        _require(cfg, ["value"], "constant modifier")
        c = float(cfg["value"])
        if c <= 0:
            raise ConfigurationError("constant modifier must be positive")
        return lambda x: c
    if cfg["name"] == "ball-center-default":
        from .kernels import ball_center_modifier

        return ball_center_modifier(kernel)
    raise ConfigurationError(f"unknown modifier {cfg['name']!r}")


def _read_csv(path):
    with open(path) as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].lstrip().startswith("#")]
    try:
        return np.array([[float(x) for x in row] for row in rows])
    except ValueError as err:
        raise ConfigurationError(f"non-numeric entry in CSV {path}: {err}") from err


def build_grid(cfg):
    _check_keys(cfg, {"shape", "lo", "hi", "cells", "center", "radius"}, "grid")
    _require(cfg, ["shape"], "grid")
    if cfg["shape"] == "box":
        _require(cfg, ["lo", "hi", "cells"], "box grid")
        return grid_box(cfg["lo"], cfg["hi"], cfg["cells"])
    if cfg["shape"] == "ball":
        _require(cfg, ["center", "radius", "cells"], "ball grid")
        return grid_ball(cfg["center"], float(cfg["radius"]), cfg["cells"])
    raise ConfigurationError(f"unknown grid shape {cfg['shape']!r}")


def build_density(cfg):
    _check_keys(cfg, {"name", "value", "p", "scale", "amplitude", "width", "center"}, "density")
    _require(cfg, ["name"], "density")
    name = cfg["name"]
    if name == "constant":
        c = float(cfg.get("value", 1.0))
        if c < 0:
            raise ConfigurationError("constant density must be >= 0")
        return lambda pts: np.full(len(pts), c)
    if name == "power":
        p = float(cfg.get("p", -1.0))
        scale = float(cfg.get("scale", 1.0))
        center = cfg.get("center")

        def power(pts):
            rel = pts - np.asarray(center, float) if center is not None else pts
            r = np.linalg.norm(rel, axis=1)
            with np.errstate(divide="ignore"):
                v = scale * r**p
            return np.where(np.isfinite(v), v, 0.0)

        return power
    if name == "gaussian":
        amp = float(cfg.get("amplitude", 1.0))
        width = float(cfg.get("width", 1.0))
        center = cfg.get("center")

        def gauss(pts):
            rel = pts - np.asarray(center, float) if center is not None else pts
            return amp * np.exp(-np.sum(rel * rel, axis=1) / (2.0 * width**2))

        return gauss
    raise ConfigurationError(f"unknown density {name!r} (expected constant | power | gaussian)")


def build_measure(cfg):
    _check_keys(cfg, {"kind", "data", "csv", "grid", "density", "scale"}, "measure")
    _require(cfg, ["kind"], "measure")
    if cfg["kind"] == "atoms":
        if "csv" in cfg:
            rows = _read_csv(cfg["csv"])
            meas = from_atoms(rows)
        else:
            _require(cfg, ["data"], "atoms measure")
            meas = from_atoms(np.asarray(cfg["data"], float))
    elif cfg["kind"] == "density":
        _require(cfg, ["grid", "density"], "density measure")
        meas = from_density(build_grid(cfg["grid"]), build_density(cfg["density"]))
    else:
        raise ConfigurationError(f"unknown measure kind {cfg['kind']!r}")
    if "scale" in cfg:
        meas = meas.scaled(float(cfg["scale"]))
    return meas


def build_boundary(cfg, dim):
    _check_keys(cfg, {"name", "value", "offset", "coeffs"}, "boundary data")
    _require(cfg, ["name"], "boundary data")
    if cfg["name"] == "zero":
        return BoundaryData.zero()
    if cfg["name"] == "constant":
        _require(cfg, ["value"], "constant boundary data")
        return BoundaryData.constant(float(cfg["value"]))
    if cfg["name"] == "affine":
        offset = float(cfg.get("offset", 0.0))
        coeffs = np.asarray(cfg.get("coeffs", [0.0] * dim), float)
        if len(coeffs) != dim:
            raise ConfigurationError(f"affine boundary data needs {dim} coefficients")

        def f(xi):
            return offset + float(coeffs @ np.asarray(xi, float))

        sup = None  # proxy computed over quadrature nodes
        return BoundaryData.function(f, sup=sup)
    raise ConfigurationError(f"unknown boundary data {cfg['name']!r}")


def build_points(cfg, dim, rng, kernel=None):
    _check_keys(cfg, {"kind", "data", "grid", "count", "center", "radius", "lo", "hi",
                      "min_atom_distance"}, "points")
    _require(cfg, ["kind"], "points")
    kind = cfg["kind"]
    if kind == "explicit":
        _require(cfg, ["data"], "explicit points")
        return np.asarray(cfg["data"], float)
    if kind == "grid":
        _require(cfg, ["grid"], "grid points")
        return build_grid(cfg["grid"]).centers
    if kind == "random-ball":
        _require(cfg, ["count", "center", "radius"], "random-ball points")
        return _sample_ball(rng, int(cfg["count"]), np.asarray(cfg["center"], float),
                            float(cfg["radius"]))
    if kind == "random-box":
        _require(cfg, ["count", "lo", "hi"], "random-box points")
        lo = np.asarray(cfg["lo"], float)
        hi = np.asarray(cfg["hi"], float)
        return rng.uniform(lo, hi, size=(int(cfg["count"]), len(lo)))
    if kind == "atoms-only":
        return None  # the problem's point set is exactly the atoms
    raise ConfigurationError(f"unknown points kind {kind!r}")


def _sample_ball(rng, count, center, radius):
    n = len(center)
    out = np.empty((count, n))
    k = 0
    while k < count:
        cand = rng.uniform(-1.0, 1.0, size=(2 * (count - k), n))
        cand = cand[np.sum(cand * cand, axis=1) < 1.0]
        take = min(len(cand), count - k)
        out[k:k + take] = center + radius * cand[:take]
        k += take
    return out


def build_solver_options(cfg):
    _check_keys(cfg, {"tol", "max_iter", "blowup_threshold", "diagonal_policy",
                      "poisson_nodes", "mode"}, "solver")
    kw = {k: cfg[k] for k in ("tol", "blowup_threshold") if k in cfg}
    if "max_iter" in cfg:
        kw["max_iter"] = int(cfg["max_iter"])
    if "diagonal_policy" in cfg:
        kw["diagonal_policy"] = cfg["diagonal_policy"]
    if "poisson_nodes" in cfg:
        kw["poisson_nodes"] = int(cfg["poisson_nodes"])
    return SolverOptions(**kw), cfg.get("mode", "minimal")


def build_problem(problem_cfg, solver_cfg=None, seed=0):
    _check_keys(problem_cfg, {"kernel", "exponents", "measures", "sigma0", "harmonic",
                              "boundary", "points"}, "problem")
    _require(problem_cfg, ["kernel", "exponents", "measures"], "problem")
    rng = np.random.default_rng(np.random.PCG64(seed))
    kernel = build_kernel(problem_cfg["kernel"])
    measures = [build_measure(m) for m in problem_cfg["measures"]]
    sigma0 = build_measure(problem_cfg["sigma0"]) if problem_cfg.get("sigma0") else None
    harmonic = None
    boundary = None
    if "boundary" in problem_cfg and problem_cfg["boundary"] is not None:
        boundary = build_boundary(problem_cfg["boundary"], kernel.domain.dim)
    elif "harmonic" in problem_cfg and problem_cfg["harmonic"] is not None:
        h = problem_cfg["harmonic"]
        if isinstance(h, (int, float)):
            harmonic = float(h)
            if harmonic < 0:
                raise ConfigurationError("the harmonic part must be >= 0")
        else:
            raise ConfigurationError("harmonic must be a nonnegative constant; use boundary for data on the sphere")
    points = None
    if problem_cfg.get("points") is not None:
        points = build_points(problem_cfg["points"], kernel.domain.dim, rng, kernel)
    options, mode = build_solver_options(solver_cfg or {})
    problem = Problem(kernel, problem_cfg["exponents"], measures, sigma0=sigma0,
                      harmonic=harmonic, boundary=boundary, points=points, options=options)
    return problem, mode
