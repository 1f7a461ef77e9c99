"""Constructive solvers for u = sum_i G(u^{q_i} dsigma_i) + G sigma_0 + H.

Three iterations, all instances of the same monotone map T:

* minimal-from-below: start at c_lower * sum (G sigma_i)^{1/(1-q_i)} + G sigma_0 + H,
  where c_lower = (1-q_1)^{1/(1-q_1)} b^{-q_1/(1-q_1)^2}; the sequence is
  pointwise nondecreasing, stays below c_upper, and converges to the minimal
  positive bounded solution. Monotonicity and the bound are asserted in-loop,
  not assumed.
* descending-from-above: start at the constant c_upper (T maps it below itself
  by the definition of c_upper); pointwise nonincreasing, converges to the
  maximal bounded solution below c_upper.
* schauder: start at v_0 = sum c_i (G sigma_i)^{1/(1-q_i)} + G sigma_0 + H with
  per-term constants c_i = (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)^2}; every iterate
  is asserted to stay inside [v_0, schauder_cap], and an empirical Hoelder
  modulus of T is sampled against sum ||G sigma_i||_inf.

Nonexistence: if any coefficient potential is +inf or exceeds the blow-up
threshold on the evaluation set, the solver refuses with status
"nonexistence-flagged" (boundedness of every G sigma_i is necessary for a
bounded solution to exist).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EvaluationError, InternalInvariantError
from .geometry import as_points, row_index_map
from .measures import AtomicMeasure, transform_modifier
from .potentials import ScalarField, harmonic_extension_ball, potential_matrix

__all__ = [
    "SolverOptions",
    "Problem",
    "Constants",
    "SolveReport",
    "constants",
    "solve_minimal",
    "solve_from_above",
    "schauder_iterate",
    "uniqueness_gap",
    "solve_modified",
    "apply_map",
]


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 10_000
    blowup_threshold: float = 1e6
    diagonal_policy: str = "auto"
    monotone_slack: float = 1e-12
    poisson_nodes: int = None

    def copy_with(self, **kw):
        d = self.__dict__.copy()
        d.update(kw)
        return SolverOptions(**d)


def _empty_measure():
    return AtomicMeasure(np.zeros((0, 1)), np.zeros(0))


class Problem:
    """Kernel + exponents + measures + harmonic part over a shared evaluation point set.

    Exponents are sorted nonincreasing (measures permuted in lockstep, the
    permutation is recorded so reports can refer to user-order indices), zero
    measures are dropped, and the point set is extended so it contains every
    atom location (the map needs u at the atoms).
    """

    def __init__(self, kernel, exponents, measures, sigma0=None, harmonic=None,
                 boundary=None, points=None, options=None):
        self.kernel = kernel
        self.options = options or SolverOptions()
        qs = np.asarray(exponents, dtype=float).reshape(-1)
        measures = list(measures)
        if len(measures) != len(qs):
            raise ConfigurationError(f"{len(qs)} exponents but {len(measures)} measures")
        for q in qs:
            if not (0.0 < q < 1.0):
                raise ConfigurationError(f"every exponent must lie in (0,1); got {q}")
        order = np.argsort(-qs, kind="stable")
        self.user_order = [int(k) for k in order]
        qs = qs[order]
        measures = [measures[k] for k in order]
        self.dropped_terms = [self.user_order[i] for i, s in enumerate(measures) if s.is_zero]
        keep = [i for i, s in enumerate(measures) if not s.is_zero]
        self.exponents = [float(qs[i]) for i in keep]
        self.measures = [measures[i] for i in keep]
        self.term_user_index = [self.user_order[i] for i in keep]
        self.sigma0 = sigma0 if sigma0 is not None else _empty_measure()

        dim = kernel.domain.dim
        base = as_points(points, dim) if points is not None else np.zeros((0, dim))
        atom_blocks = [s.locations for s in self.measures if s.size] + (
            [self.sigma0.locations] if self.sigma0.size else []
        )
        pts = [base]
        seen = row_index_map(base)
        for block in atom_blocks:
            for row in np.ascontiguousarray(block):
                key = row.tobytes()
                if key not in seen:
                    seen[key] = len(seen)
                    pts.append(row.reshape(1, -1))
        self.points = np.vstack(pts) if len(pts) > 1 else base
        if len(self.points) == 0:
            raise ConfigurationError("the problem needs at least one evaluation point")
        kernel.check_in_domain(self.points)
        self._index = row_index_map(self.points)

        # harmonic part
        if boundary is not None:
            self.boundary = boundary
            self.harmonic_source = "boundary"
            self.H = harmonic_extension_ball(boundary, kernel.domain, self.points,
                                             self.options.poisson_nodes)
            if boundary.kind == "function" and boundary._sup is None:
                from .potentials import sphere_nodes

                nodes, _ = sphere_nodes(kernel.domain, self.options.poisson_nodes)
                boundary._sup = float(np.max(boundary.sample(nodes)))  # quadrature-node proxy
        else:
            self.boundary = None
            self.harmonic_source = "zero" if harmonic is None else "field"
            self.H = _as_field(harmonic, self.points)
        if self.H.has_inf:
            raise ConfigurationError("the harmonic part must be finite on the evaluation points")

        # atom indices and iteration matrices
        policy = self.options.diagonal_policy
        self.atom_idx = []
        self.pot_mats = []
        self.gsig = []
        for s in self.measures:
            idx = np.array([self._index[row.tobytes()] for row in np.ascontiguousarray(s.locations)], int)
            self.atom_idx.append(idx)
            M = potential_matrix(kernel, s, self.points, policy)
            self.pot_mats.append(M)
            self.gsig.append(ScalarField(self.points, _matvec(M, s.weights)))
        if self.sigma0.size:
            M0 = potential_matrix(kernel, self.sigma0, self.points, policy)
            self.gsig0 = ScalarField(self.points, _matvec(M0, self.sigma0.weights))
        else:
            self.gsig0 = ScalarField(self.points, np.zeros(len(self.points)))

    @property
    def m(self):
        return len(self.measures)

    @property
    def q1(self):
        return self.exponents[0] if self.exponents else 0.0

    @property
    def q_min(self):
        return self.exponents[-1] if self.exponents else 0.0

    def apply_map(self, u_values):
        """One application of T: sum_i G(u^{q_i} dsigma_i) + G sigma_0 + H."""
        out = self.gsig0.values + self.H.values
        for qi, s, idx, M in zip(self.exponents, self.measures, self.atom_idx, self.pot_mats):
            out = out + _matvec(M, s.weights * u_values[idx] ** qi)
        return out

    def field(self, values):
        return ScalarField(self.points, values)

    def sup_sums(self):
        """(sum_i ||G sigma_i||, including sigma_0) and ||H||, as point-set maxima."""
        total = self.gsig0.sup() + sum(f.sup() for f in self.gsig)
        return total, self.H.sup()

    def data_all_zero(self):
        return self.m == 0 and self.sigma0.is_zero and self.H.sup() == 0.0


def apply_map(problem, u):
    """One application of the map T to a field (or value array), returned as a field."""
    vals = u.values if isinstance(u, ScalarField) else np.asarray(u, float)
    return problem.field(problem.apply_map(vals))


def _matvec(M, w):
    finite = np.isfinite(M)
    if np.all(finite):
        return M @ w
    return np.where(np.all(finite | (w == 0.0)[None, :], axis=1), np.where(finite, M, 0.0) @ w, np.inf)


def _as_field(harmonic, points):
    if harmonic is None:
        return ScalarField(points, np.zeros(len(points)))
    if isinstance(harmonic, ScalarField):
        if harmonic.points is points or np.array_equal(harmonic.points, points):
            return ScalarField(points, harmonic.values)
        raise ConfigurationError("harmonic field is defined over a different point set")
    if callable(harmonic):
        return ScalarField(points, np.array([float(harmonic(p)) for p in points]))
    arr = np.asarray(harmonic, dtype=float)
    if arr.shape == ():
        return ScalarField(points, np.full(len(points), float(arr)))
    return ScalarField(points, arr)


@dataclass
class Constants:
    b: float
    b_source: str
    q1: float
    c_lower: float
    c_upper: float
    per_term_lower: list      # (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)}
    per_term_chain: list      # (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)^2}
    sup_gsig: list            # [||G sigma_1||, ..., ||G sigma_m||] point-set maxima
    sup_gsig0: float
    sup_H: float
    schauder_cap: float = None
    c_riesz_lower: float = None  # c_lower with b = 2^{n - 2 alpha}; set for Riesz kernels

    def as_dict(self):
        d = dict(self.__dict__)
        return d


def wmp_constant_of(kernel):
    """The kernel's maximum-principle constant, falling back to 2h for quasi-metric kernels."""
    if kernel.wmp_constant is not None:
        return float(kernel.wmp_constant), "analytic"
    if kernel.qm_constant is not None:
        return 2.0 * float(kernel.qm_constant), "from-quasi-metric-constant"
    raise ConfigurationError(
        "kernel carries no maximum-principle constant; set wmp_constant or a quasi-metric constant"
    )


def lower_constant(q1, b):
    return (1.0 - q1) ** (1.0 / (1.0 - q1)) * b ** (-q1 / (1.0 - q1) ** 2)


def constants(problem):
    """All explicit constants of the two-sided estimates for this problem."""
    b, b_source = wmp_constant_of(problem.kernel)
    q1 = problem.q1
    sup_gsig = [f.sup() for f in problem.gsig]
    sup_g0 = problem.gsig0.sup()
    sup_H = problem.H.sup()
    if any(np.isinf(v) for v in sup_gsig) or np.isinf(sup_g0):
        raise EvaluationError("a coefficient potential is infinite on the evaluation set")
    S = sum(sup_gsig) + sup_g0 + sup_H
    c_lower = lower_constant(q1, b) if problem.m else 1.0
    c_upper = max(1.0, S ** (1.0 / (1.0 - q1))) if problem.m else max(1.0, S)
    per_lower = [(1 - q) ** (1 / (1 - q)) * b ** (-q / (1 - q)) for q in problem.exponents]
    per_chain = [(1 - q) ** (1 / (1 - q)) * b ** (-q / (1 - q) ** 2) for q in problem.exponents]
    cst = Constants(b, b_source, q1, c_lower, c_upper, per_lower, per_chain,
                    sup_gsig, sup_g0, sup_H)
    if hasattr(problem.kernel, "alpha") and hasattr(problem.kernel, "n") and problem.m:
        cst.c_riesz_lower = lower_constant(q1, 2.0 ** (problem.kernel.n - 2 * problem.kernel.alpha))
    return cst


@dataclass
class SolveReport:
    solution: ScalarField
    iterations: int
    trace: list
    mode: str
    status: str     # "converged" | "max-iter" | "nonexistence-flagged"
    constants: Constants
    diagnostics: dict = field(default_factory=dict)
    problem: Problem = None

    @property
    def converged(self):
        return self.status == "converged"

    def rate_estimate(self):
        """Geometric rate of the sup-change trace (median of late ratios)."""
        t = [x for x in self.trace if x > 0]
        if len(t) < 4:
            return None
        ratios = [t[i + 1] / t[i] for i in range(len(t) - 4, len(t) - 1)]
        return float(np.median(ratios))

    def to_json(self):
        return {
            "mode": self.mode,
            "status": self.status,
            "iterations": self.iterations,
            "trace": [float(x) for x in self.trace],
            "constants": self.constants.as_dict() if self.constants else None,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _existence_guard(problem):
    """Refuse to iterate when a coefficient potential is unbounded: no bounded solution exists."""
    thr = problem.options.blowup_threshold
    fields = [("sigma0", problem.gsig0)] + [
        (f"sigma{problem.term_user_index[i] + 1}", f) for i, f in enumerate(problem.gsig)
    ]
    for name, f in fields:
        s = f.sup()
        if np.isinf(s) or s > thr:
            return SolveReport(
                solution=None, iterations=0, trace=[], mode="refused",
                status="nonexistence-flagged", constants=None, problem=problem,
                diagnostics={
                    "offending_term": name,
                    "potential_sup": s,
                    "blowup_threshold": thr,
                    "message": (
                        f"the potential of {name} is unbounded on the evaluation set "
                        f"(sup {s:.3g} exceeds {thr:.3g}); a positive bounded solution exists "
                        "iff every coefficient potential is bounded, so the solve is refused"
                    ),
                },
            )
    return None


def _iterate(problem, u0, cst, mode, nondecreasing, extra_checks=None):
    opts = problem.options
    slack = opts.monotone_slack
    u = np.asarray(u0, float).copy()
    trace = []
    status = "max-iter"
    j = 0
    for j in range(1, opts.max_iter + 1):
        un = problem.apply_map(u)
        scale = max(float(np.max(np.abs(un))), 1e-300)
        if nondecreasing:
            drop = float(np.max(u - un))
            if drop > slack * scale:
                k = int(np.argmax(u - un))
                raise InternalInvariantError(
                    f"{mode}: the iteration lost monotonicity (drop {drop:.3e} at point "
                    f"{problem.points[k].tolist()}); the kernel or its constants are inconsistent",
                    witness=problem.points[k].tolist(),
                )
        else:
            rise = float(np.max(un - u))
            if rise > slack * scale:
                k = int(np.argmax(un - u))
                raise InternalInvariantError(
                    f"{mode}: the descending iteration rose by {rise:.3e} at point "
                    f"{problem.points[k].tolist()}",
                    witness=problem.points[k].tolist(),
                )
        if float(np.max(un)) > cst.c_upper + slack * max(scale, cst.c_upper):
            k = int(np.argmax(un))
            raise InternalInvariantError(
                f"{mode}: iterate exceeded the explicit bound {cst.c_upper:.6g} "
                f"(value {un[k]:.6g} at point {problem.points[k].tolist()})",
                witness=problem.points[k].tolist(),
            )
        if extra_checks is not None:
            extra_checks(un)
        delta = float(np.max(np.abs(un - u)))
        trace.append(delta)
        u = un
        if delta <= opts.tol:
            status = "converged"
            break
    return u, j, trace, status


def solve_minimal(problem):
    """Monotone iteration from below; converges to the minimal positive bounded solution."""
    flagged = _existence_guard(problem)
    if flagged:
        return flagged
    if problem.data_all_zero():
        raise ConfigurationError("at least one of the measures or the harmonic part must be nonzero")
    cst = constants(problem)
    u0 = problem.gsig0.values + problem.H.values
    for q, f in zip(problem.exponents, problem.gsig):
        u0 = u0 + cst.c_lower * f.values ** (1.0 / (1.0 - q))
    u, iters, trace, status = _iterate(problem, u0, cst, "minimal-from-below", nondecreasing=True)
    return SolveReport(problem.field(u), iters, trace, "minimal-from-below", status, cst,
                       {"start_sup": float(np.max(u0)), "rate_target": problem.q1},
                       problem)


def solve_from_above(problem):
    """Descending iteration from the constant c_upper; converges to the maximal solution below it."""
    flagged = _existence_guard(problem)
    if flagged:
        return flagged
    if problem.data_all_zero():
        raise ConfigurationError("at least one of the measures or the harmonic part must be nonzero")
    cst = constants(problem)
    u0 = np.full(len(problem.points), cst.c_upper)
    u, iters, trace, status = _iterate(problem, u0, cst, "descending-from-above", nondecreasing=False)
    return SolveReport(problem.field(u), iters, trace, "descending-from-above", status, cst,
                       {"start_sup": cst.c_upper, "rate_target": problem.q1}, problem)


def schauder_iterate(problem, modulus_pairs=50, seed=0):
    """Iterate T from the explicit compact-class floor, asserting class membership throughout.

    The floor uses per-term constants (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)^2}
    (equal to the usual (1-q_i)^{1/(1-q_i)} when the kernel satisfies the
    strong maximum principle, b = 1). After convergence the empirical Hoelder
    modulus ||T v1 - T v2|| / ||v1 - v2||^{q_min} is sampled over random pairs
    in the class and reported against its bound sum_i ||G sigma_i||.
    """
    flagged = _existence_guard(problem)
    if flagged:
        return flagged
    cst = constants(problem)
    v0 = problem.gsig0.values + problem.H.values
    for q, f, chain in zip(problem.exponents, problem.gsig, cst.per_term_chain):
        v0 = v0 + chain * f.values ** (1.0 / (1.0 - q))
    sup_f = problem.boundary.sup_norm() if problem.boundary is not None else problem.H.sup()
    S_f = sum(cst.sup_gsig) + cst.sup_gsig0 + sup_f
    cap = max(1.0, float(np.max(v0)),
              S_f ** (1.0 / (1.0 - problem.q1)) if problem.m else S_f)
    cst.schauder_cap = cap
    slack = problem.options.monotone_slack

    def membership(un):
        scale = max(float(np.max(un)), 1.0)
        low = float(np.max(v0 - un))
        if low > slack * scale:
            k = int(np.argmax(v0 - un))
            raise InternalInvariantError(
                f"schauder: iterate fell below the class floor by {low:.3e} at "
                f"{problem.points[k].tolist()}", witness=problem.points[k].tolist())
        if float(np.max(un)) > cap + slack * scale:
            k = int(np.argmax(un))
            raise InternalInvariantError(
                f"schauder: iterate exceeded the class cap {cap:.6g} at "
                f"{problem.points[k].tolist()}", witness=problem.points[k].tolist())

    u, iters, trace, status = _iterate(problem, v0, cst, "schauder", nondecreasing=True,
                                       extra_checks=membership)

    # small-ball decay table of each coefficient measure, attached as a diagnostic
    from .potentials import kato_modulus

    scale_r = problem.kernel.domain.radius if problem.kernel.domain.shape == "ball" else 1.0
    kato_tables = []
    for s in problem.measures:
        try:
            kato_tables.append(kato_modulus(problem.kernel, s,
                                            [scale_r / 2**k for k in range(2, 6)],
                                            problem.points, problem.options.diagonal_policy))
        except Exception as err:  # explicit atoms on points, etc.
            kato_tables.append(str(err))

    # empirical Hoelder modulus of T over the class
    rng = np.random.default_rng(seed)
    bound = float(sum(cst.sup_gsig))
    worst = 0.0
    amp = min(0.45, max(1e-6, (cap - float(np.max(v0))) / 2.0))
    for _ in range(modulus_pairs):
        base = v0 + rng.uniform(0.0, 1.0, len(v0)) * np.maximum(cap - v0, 0.0)
        delta = rng.uniform(-amp, amp, len(v0))
        v1 = np.clip(base, v0, cap)
        v2 = np.clip(base + delta, v0, cap)
        dist = float(np.max(np.abs(v1 - v2)))
        if dist == 0.0 or dist >= 1.0:
            continue
        tdist = float(np.max(np.abs(problem.apply_map(v1) - problem.apply_map(v2))))
        worst = max(worst, tdist / dist**problem.q_min)
    diag = {
        "class_floor_sup": float(np.max(v0)),
        "class_cap": cap,
        "modulus_empirical": worst,
        "modulus_bound": bound,
        "modulus_pairs": modulus_pairs,
        "harmonic_source": problem.harmonic_source,
        "kato_tables": kato_tables,
    }
    return SolveReport(problem.field(u), iters, trace, "schauder", status, cst, diag, problem)


@dataclass
class UniquenessReport:
    kappa: float
    q1: float
    factors: list              # kappa^{q1^j}, j = 0..j_max
    residual_u: float
    residual_u_tilde: float
    both_solutions: bool
    reapplied_bounds_hold: bool
    per_step: list
    message: str
    grade: str = "evidence"    # "certificate" only for quasi-metric kernels

    def to_json(self):
        return _jsonable(self.__dict__)


def uniqueness_gap(problem, u, u_tilde, j_max=8):
    """Contraction gap between two candidate solutions, re-verified operationally.

    kappa = max(sup u~/u, sup u/u~); for two genuine solutions re-applying the
    map j times forces them within the factor kappa^{q1^j} of each other, which
    squeezes to 1. Inputs that are not fixed points are reported as such via
    their residuals.
    """
    uv = np.asarray(u.values if isinstance(u, ScalarField) else u, float)
    tv = np.asarray(u_tilde.values if isinstance(u_tilde, ScalarField) else u_tilde, float)
    if np.any(uv <= 0) or np.any(tv <= 0):
        raise EvaluationError("uniqueness gap needs strictly positive fields (zero gives undefined ratios)")
    q1 = problem.q1
    kappa_val = float(max(np.max(tv / uv), np.max(uv / tv)))
    factors = [kappa_val ** (q1**j) for j in range(j_max + 1)]
    scale = max(float(np.max(uv)), float(np.max(tv)), 1.0)
    res_u = float(np.max(np.abs(problem.apply_map(uv) - uv)))
    res_t = float(np.max(np.abs(problem.apply_map(tv) - tv)))
    res_tol = max(100.0 * problem.options.tol, 1e-8) * scale
    both = res_u <= res_tol and res_t <= res_tol

    per_step = []
    a, bfield = uv.copy(), tv.copy()
    ok_all = True
    fuzz = 1e-12 * scale
    for j in range(1, j_max + 1):
        a = problem.apply_map(a)
        bfield = problem.apply_map(bfield)
        f = kappa_val ** (q1**j)
        upper_ok = bool(np.all(bfield <= f * a * (1 + 1e-12) + fuzz))
        lower_ok = bool(np.all(bfield >= a / f * (1 - 1e-12) - fuzz))
        per_step.append({"j": j, "factor": f, "upper_ok": upper_ok, "lower_ok": lower_ok})
        ok_all = ok_all and upper_ok and lower_ok
    if both:
        msg = "both inputs are fixed points; the contraction factors squeeze them together"
    else:
        msg = "inputs are not both solutions (fixed-point residual too large); the gap is not a uniqueness statement"
    # without a quasi-metric structure the agreement is evidence, not a uniqueness certificate
    grade = "certificate" if problem.kernel.qm_constant is not None else "evidence"
    return UniquenessReport(kappa_val, q1, factors, res_u, res_t, both, ok_all, per_step, msg, grade)


def solve_modified(problem, modifier="ball-center-default", max_retries=6):
    """Solve through the modified kernel G/(m m) and map back, u = m * v.

    The transformed problem needs its own maximum-principle constant; it is
    seeded from a sampled quasi-metric estimate (2 h-hat) and doubled, up to
    max_retries times, if the from-below monotonicity assertion fires (larger b
    only shrinks the starting constant, which is always safe).
    """
    from .kernels import ball_center_modifier, estimate_qm_constant, modify

    if isinstance(modifier, str):
        if modifier != "ball-center-default":
            raise ConfigurationError(f"unknown modifier preset {modifier!r}")
        modifier_fn = ball_center_modifier(problem.kernel)
        modifier_desc = "ball-center-default: m(x) = G(x, center) (implementation choice)"
    else:
        modifier_fn = modifier
        modifier_desc = "user modifier"
    mvals = np.array([float(modifier_fn(p)) for p in problem.points])
    if np.any(~(mvals > 0)) or np.any(np.isinf(mvals)):
        k = int(np.argmax(~((mvals > 0) & np.isfinite(mvals))))
        raise EvaluationError(f"modifier must be positive and finite on the evaluation points; "
                              f"value {mvals[k]} at {problem.points[k].tolist()}",
                              witness=problem.points[k].tolist())
    ker_mod = modify(problem.kernel, modifier_fn)
    meas_mod = [transform_modifier(s, modifier_fn, 1.0 + q)
                for q, s in zip(problem.exponents, problem.measures)]
    sigma0_mod = (transform_modifier(problem.sigma0, modifier_fn, 1.0)
                  if problem.sigma0.size else problem.sigma0)
    H_mod = problem.H.values / mvals

    constant_modifier = bool(np.all(mvals == mvals[0]))
    if constant_modifier:
        # rescaling by a constant leaves both structural constants unchanged
        ker_mod.wmp_constant = problem.kernel.wmp_constant
        ker_mod.qm_constant = problem.kernel.qm_constant
        b0 = None
    else:
        stride = max(1, len(problem.points) // 36)
        sample = problem.points[::stride]
        h_hat = estimate_qm_constant(ker_mod, sample)
        b0 = 2.0 * h_hat
        ker_mod.wmp_constant = b0
        ker_mod.qm_constant = h_hat

    retries = 0
    last_err = None
    for attempt in range(max_retries + 1):
        sub = Problem(ker_mod, problem.exponents, meas_mod, sigma0=sigma0_mod,
                      harmonic=H_mod, points=problem.points, options=problem.options)
        try:
            rep = solve_minimal(sub)
            break
        except InternalInvariantError as err:
            if constant_modifier:
                raise
            retries += 1
            last_err = err
            ker_mod.wmp_constant = ker_mod.wmp_constant * 2.0
    else:
        raise InternalInvariantError(
            f"modified solve failed after {max_retries} retries of doubling the "
            f"maximum-principle constant: {last_err}")
    if rep.status == "nonexistence-flagged":
        return rep
    u = rep.solution.values * mvals
    diag = dict(rep.diagnostics)
    diag.update({
        "modifier": modifier_desc,
        "modified_wmp_constant": ker_mod.wmp_constant,
        "retries": retries,
        "inner_mode": rep.mode,
    })
    return SolveReport(problem.field(u), rep.iterations, rep.trace, "modified",
                       rep.status, rep.constants, diag, problem)
