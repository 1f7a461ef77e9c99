"""Machine-checkable certificates for the explicit inequalities.

Every check evaluates one pointwise inequality LHS <= RHS on a concrete solved
instance and records the worst signed slack min(RHS - LHS) together with the
witness point. Violation means the slack falls below -(atol + rtol |RHS|);
defaults separate floating-point noise from genuine violations across kernel
scales.

Grades: a certificate whose constants are analytic (built-in kernel constants,
exact enumeration or LP values on point clouds) is "certificate" grade; checks
that rely on sampled lower estimates of the embedding constant kappa on the
right-hand side of an upper bound are "evidence" grade, because an
underestimated kappa makes such a check stricter than the true bound.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateMeasureError
from .geometry import as_points, row_index_map
from .intrinsic import intrinsic_field
from .measures import AtomicMeasure
from .potentials import ScalarField, potential
from .solver import lower_constant, constants as solve_constants

__all__ = [
    "Certificate",
    "check_bilateral",
    "check_iterated",
    "check_lower",
    "check_qm_product",
    "check_intrinsic_lower",
    "check_symmetric_lower",
    "check_qm_upper",
    "check_qmm_bilateral",
    "check_wmp",
    "residual",
    "batch_summary",
]

ATOL = 1e-9
RTOL = 1e-9

ANALYTIC_SOURCES = {"analytic", "exact-enumeration", "exact-lp", "exact-candidates",
                    "from-quasi-metric-constant"}


@dataclass
class Certificate:
    inequality_id: str
    constants_used: dict
    worst_slack: float
    witness: list
    status: str            # "holds" | "violated" | "not-applicable"
    grade: str             # "certificate" | "evidence"
    point_set: str
    diagonal_policy: str
    details: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.status == "holds"

    def to_json(self):
        def conv(x):
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [conv(v) for v in x]
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, (np.floating, np.integer, np.bool_)):
                return x.item()
            return x

        return conv(self.__dict__)


def _grade(constants_used):
    srcs = [v.get("provenance", "estimated") for v in constants_used.values() if isinstance(v, dict)]
    return "certificate" if all(s in ANALYTIC_SOURCES for s in srcs) else "evidence"


def _finish(inequality_id, lhs, rhs, points, constants_used, policy, details=None,
            atol=ATOL, rtol=RTOL, grade=None):
    lhs = np.asarray(lhs, float)
    rhs = np.asarray(rhs, float)
    slack = rhs - lhs
    slack = np.where(np.isinf(rhs) & np.isinf(lhs), 0.0, slack)  # inf <= inf counts as tight
    k = int(np.argmin(slack))
    worst = float(slack[k])
    allowance = atol + rtol * (abs(rhs[k]) if np.isfinite(rhs[k]) else 0.0)
    status = "holds" if worst >= -allowance else "violated"
    return Certificate(
        inequality_id=inequality_id,
        constants_used=constants_used,
        worst_slack=worst,
        witness=[float(c) for c in np.asarray(points)[k]],
        status=status,
        grade=grade or _grade(constants_used),
        point_set=f"{len(np.asarray(points))} evaluation points",
        diagonal_policy=policy,
        details=details or {},
    )


def _not_applicable(inequality_id, reason, constants_used=None, policy="n/a"):
    return Certificate(inequality_id, constants_used or {}, float("nan"), None,
                       "not-applicable", "certificate", "n/a", policy, {"reason": reason})


def _values(u):
    return u.values if isinstance(u, ScalarField) else np.asarray(u, float)


def _atom_indices(points, measure):
    idx_map = row_index_map(points)
    idx = []
    for row in np.ascontiguousarray(measure.locations):
        k = idx_map.get(row.tobytes())
        if k is None:
            raise ConfigurationError(
                "the field's point set must contain every atom location (u at atoms is needed)")
        idx.append(k)
    return np.asarray(idx, int)


def _weighted(measure, factors):
    return AtomicMeasure(measure.locations, measure.weights * factors,
                         measure.origin, measure.cell_volume, merge=False)


# -- the checks -------------------------------------------------------------


def check_bilateral(u, problem, cst=None, atol=ATOL, rtol=RTOL):
    """Two-sided envelope of a solved instance.

    lower:  c_lower sum (G sigma_i)^{1/(1-q_i)} + G sigma_0 + H  <=  u
    upper:  u  <=  c_upper^{q_1} sum G sigma_i + G sigma_0 + H, and sup u <= c_upper.
    """
    cst = cst or solve_constants(problem)
    uv = _values(u)
    base = problem.gsig0.values + problem.H.values
    lower = base.copy()
    upper = base.copy()
    for q, f in zip(problem.exponents, problem.gsig):
        lower = lower + cst.c_lower * f.values ** (1.0 / (1.0 - q))
        upper = upper + cst.c_upper**problem.q1 * f.values
    lhs = np.concatenate([lower, uv, [float(np.max(uv))]])
    rhs = np.concatenate([uv, upper, [cst.c_upper]])
    pts = np.vstack([problem.points, problem.points, problem.points[:1]])
    consts = {
        "c_lower": {"value": cst.c_lower, "provenance": cst.b_source},
        "c_upper": {"value": cst.c_upper, "provenance": "proxy-sup-norm"},
        "b": {"value": cst.b, "provenance": cst.b_source},
    }
    details = {
        "lower_worst_slack": float(np.min(uv - lower)),
        "upper_worst_slack": float(np.min(upper - uv)),
        "sup_u": float(np.max(uv)),
        "harmonic_source": problem.harmonic_source,
    }
    return _finish("bilateral", lhs, rhs, pts, consts, problem.options.diagonal_policy,
                   details, atol, rtol, grade="certificate")


def check_iterated(kernel, sigma, s, b, points, policy="auto", atol=ATOL, rtol=RTOL,
                   b_provenance="analytic"):
    """Iterated-potential bound: (G sigma)^s <= s b^{s-1} G((G sigma)^{s-1} dsigma), s >= 1."""
    if s < 1:
        raise ConfigurationError(f"the iterated bound needs s >= 1, got {s}")
    points = as_points(points, kernel.domain.dim)
    gs = potential(kernel, sigma, points, policy).values
    gs_at_atoms = potential(kernel, sigma, sigma.locations, policy).values
    inner = _weighted(sigma, gs_at_atoms ** (s - 1.0))
    rhs = s * b ** (s - 1.0) * potential(kernel, inner, points, policy).values
    consts = {"b": {"value": b, "provenance": b_provenance},
              "s": {"value": s, "provenance": "analytic"}}
    return _finish("iterated-potential", gs**s, rhs, points, consts, policy,
                   {"sup_potential": float(np.max(gs))}, atol, rtol)


def check_lower(u, kernel, sigma, q, b, variant="solution-bound", policy="auto",
                atol=ATOL, rtol=RTOL, hypothesis_tol=None, b_provenance="analytic"):
    """Supersolution lower bounds.

    Hypothesis (verified first): u >= G(u^q dsigma). Then
      solution-bound:   u >= (1-q)^{1/(1-q)} b^{-q/(1-q)} (G sigma)^{1/(1-q)}
      potential-bound:  G(u^q dsigma) >= same right-hand side.
    """
    uv = _values(u)
    points = u.points if isinstance(u, ScalarField) else None
    if points is None:
        raise ConfigurationError("check_lower needs a ScalarField (points carry the atom values)")
    idx = _atom_indices(points, sigma)
    gu = potential(kernel, _weighted(sigma, uv[idx] ** q), points, policy).values
    scale = max(float(np.max(uv)), 1.0)
    hyp_tol = hypothesis_tol if hypothesis_tol is not None else 1e-8 * scale
    hyp_resid = float(np.max(gu - uv))
    consts = {"b": {"value": b, "provenance": b_provenance},
              "q": {"value": q, "provenance": "analytic"}}
    if hyp_resid > hyp_tol:
        cert = _not_applicable("supersolution-lower" if variant == "solution-bound" else "potential-lower",
                               "the supersolution hypothesis u >= G(u^q dsigma) fails", consts, policy)
        cert.details["hypothesis_residual"] = hyp_resid
        return cert
    gsig = potential(kernel, sigma, points, policy).values
    bound = (1 - q) ** (1 / (1 - q)) * b ** (-q / (1 - q)) * gsig ** (1 / (1 - q))
    if variant == "solution-bound":
        cid, lhs = "supersolution-lower", uv
    elif variant == "potential-bound":
        cid, lhs = "potential-lower", gu
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")
    return _finish(cid, bound, lhs, points, consts, policy,
                   {"hypothesis_residual": hyp_resid, "variant": variant}, atol, rtol)


def check_qm_product(kernel, sigma, nu, q, h, points, candidates=None, policy="auto",
                     atol=ATOL, rtol=RTOL, h_provenance="analytic", kappa_provenance="estimated-lower"):
    """Quasi-metric product bound:

        G((G nu)^q dsigma) <= (2h)^q (G nu)^q [ G sigma + (K sigma)^{1-q} ]   pointwise.

    K sigma on the right makes sampled kappa estimates under-estimates, so this
    is evidence grade unless kappa is exact (candidates = the full point cloud).
    """
    points = as_points(points, kernel.domain.dim)
    gnu = potential(kernel, nu, points, policy).values
    gnu_atoms = potential(kernel, nu, sigma.locations, policy).values
    lhs = potential(kernel, _weighted(sigma, gnu_atoms**q), points, policy).values
    gsig = potential(kernel, sigma, points, policy).values
    K = intrinsic_field(kernel, sigma, q, points, candidates)[0].values
    rhs = (2.0 * h) ** q * gnu**q * (gsig + K ** (1.0 - q))
    consts = {"h": {"value": h, "provenance": h_provenance},
              "kappa": {"value": float(np.max(K)), "provenance": kappa_provenance}}
    return _finish("qm-product-upper", lhs, rhs, points, consts, policy,
                   {"sup_G_nu": float(np.max(gnu))}, atol, rtol)


def check_intrinsic_lower(u, kernel, sigma, q, b, candidates=None, policy="auto",
                          atol=ATOL, rtol=RTOL, hypothesis_tol=None,
                          b_provenance="analytic", kappa_provenance="estimated-lower"):
    """Single-term intrinsic lower bound for supersolutions of u >= G(u^q dsigma):

        u >= G(u^q dsigma) >= (1-q)^{1/(1-q)} b^{-q/(1-q)} K sigma   pointwise.

    Lower estimates of kappa only weaken the right side, so the check is sound.
    """
    uv = _values(u)
    if not isinstance(u, ScalarField):
        raise ConfigurationError("check_intrinsic_lower needs a ScalarField")
    points = u.points
    idx = _atom_indices(points, sigma)
    gu = potential(kernel, _weighted(sigma, uv[idx] ** q), points, policy).values
    scale = max(float(np.max(uv)), 1.0)
    hyp_tol = hypothesis_tol if hypothesis_tol is not None else 1e-8 * scale
    hyp_resid = float(np.max(gu - uv))
    consts = {"b": {"value": b, "provenance": b_provenance},
              "kappa": {"value": float("nan"), "provenance": kappa_provenance}}
    if hyp_resid > hyp_tol:
        cert = _not_applicable("intrinsic-lower",
                               "the supersolution hypothesis u >= G(u^q dsigma) fails", consts, policy)
        cert.details["hypothesis_residual"] = hyp_resid
        return cert
    K = intrinsic_field(kernel, sigma, q, points, candidates)[0].values
    consts["kappa"]["value"] = float(np.max(K))
    bound = (1 - q) ** (1 / (1 - q)) * b ** (-q / (1 - q)) * K
    lhs = np.concatenate([bound, bound])
    rhs = np.concatenate([gu, uv])
    pts = np.vstack([points, points])
    return _finish("intrinsic-lower", lhs, rhs, pts, consts, policy,
                   {"hypothesis_residual": hyp_resid}, atol, rtol)


def _intrinsic_terms(kernel, problem, candidates=None, kappa_provenance="estimated-lower",
                     kfields=None, measures=None, exponents=None, gsig=None, H_values=None,
                     points=None, policy="auto"):
    """Shared assembly of sum_i [ (G s_i)^{1/(1-q_i)} + K s_i + G(H^{q_i} ds_i) ] over points."""
    points = problem.points if points is None else points
    measures = problem.measures if measures is None else measures
    exponents = problem.exponents if exponents is None else exponents
    gsig = [f.values for f in problem.gsig] if gsig is None else gsig
    H_values = problem.H.values if H_values is None else H_values
    total = np.zeros(len(points))
    kused = []
    for i, (q, s) in enumerate(zip(exponents, measures)):
        if kfields is not None:
            K = _values(kfields[i])
        else:
            K = intrinsic_field(kernel, s, q, points, candidates)[0].values
        kused.append(float(np.max(K)))
        idx = _atom_indices(points, s)
        ghq = potential(kernel, _weighted(s, H_values[idx] ** q), points, policy).values
        total = total + gsig[i] ** (1.0 / (1.0 - q)) + K + ghq
    return total, kused


def check_symmetric_lower(u, problem, cst=None, kfields=None, candidates=None,
                          kappa_provenance="estimated-lower", atol=ATOL, rtol=RTOL):
    """Intrinsic-potential lower bound for supersolutions under a symmetric kernel:

        u >= (c_lower/4) ( sum_i [ (G s_i)^{1/(1-q_i)} + K s_i + G(H^{q_i} ds_i) ] + G sigma_0 ) + H.

    Sound with lower estimates of kappa (a smaller right side only weakens the
    claim being checked, and a failure against it is a genuine violation).
    Quasi-symmetric kernels go through the symmetrized kernel with constant a*b
    and data (1+a)^{-q_i} sigma_i applied to (1+a) u.
    """
    kernel = problem.kernel
    cst = cst or solve_constants(problem)
    uv = _values(u)
    if kernel.symmetry == "symmetric":
        terms, kused = _intrinsic_terms(kernel, problem, candidates, kappa_provenance,
                                        kfields, policy=problem.options.diagonal_policy)
        rhs = (cst.c_lower / 4.0) * (terms + problem.gsig0.values) + problem.H.values
        consts = {
            "c_lower/4": {"value": cst.c_lower / 4.0, "provenance": cst.b_source},
            "kappa": {"value": max(kused, default=0.0), "provenance": kappa_provenance},
        }
        return _finish("symmetric-intrinsic-lower", rhs, uv, problem.points, consts,
                       problem.options.diagonal_policy,
                       {"kappa_sup_per_term": kused, "route": "symmetric"}, atol, rtol)
    if kernel.symmetry == "quasi-symmetric" and kernel.qs_constant is not None:
        from .kernels import symmetrize

        a = kernel.qs_constant
        b_s = a * cst.b
        ks = symmetrize(kernel)
        ks.wmp_constant = b_s
        meas = [s.scaled((1.0 + a) ** (-q)) for q, s in zip(problem.exponents, problem.measures)]
        gsig = [potential(ks, s, problem.points, problem.options.diagonal_policy).values for s in meas]
        g0 = (potential(ks, problem.sigma0, problem.points, problem.options.diagonal_policy).values
              if problem.sigma0.size else np.zeros(len(problem.points)))
        c_s = lower_constant(problem.q1, b_s)
        # caller kfields (if any) belong to the unsymmetrized kernel; recompute here
        terms, kused = _intrinsic_terms(ks, problem, candidates, kappa_provenance, kfields=None,
                                        measures=meas, gsig=gsig,
                                        policy=problem.options.diagonal_policy)
        rhs = (c_s / 4.0) * (terms + g0) + problem.H.values
        consts = {
            "a": {"value": a, "provenance": "exact-enumeration"},
            "b_symmetrized": {"value": b_s, "provenance": cst.b_source},
            "c/4 (derived)": {"value": c_s / 4.0, "provenance": cst.b_source},
            "kappa": {"value": max(kused, default=0.0), "provenance": kappa_provenance},
        }
        return _finish("symmetric-intrinsic-lower", rhs, (1.0 + a) * uv, problem.points, consts,
                       problem.options.diagonal_policy,
                       {"route": "symmetrized(a)", "kappa_sup_per_term": kused}, atol, rtol)
    return _not_applicable("symmetric-intrinsic-lower",
                           "kernel is neither symmetric nor quasi-symmetric with a known constant")


def check_qm_upper(u, problem, cst=None, h=None, kfields=None, candidates=None,
                   kappa_provenance="estimated-lower", atol=ATOL, rtol=RTOL):
    """Intrinsic-potential upper bound for subsolutions under a quasi-metric kernel:

        u <= 2 (8 m h)^{q_1/(1-q_1)} ( sum_i [ ... ] + G sigma_0 ) + H.

    With sampled kappa the right side may be underestimated, so a violation
    here is evidence, not proof, unless kappa is exact (point-cloud domains).
    """
    kernel = problem.kernel
    h = h if h is not None else kernel.qm_constant
    if h is None or kernel.symmetry != "symmetric":
        return _not_applicable("qm-intrinsic-upper",
                               "kernel is not quasi-metric (no constant h available)")
    cst = cst or solve_constants(problem)
    uv = _values(u)
    m = max(problem.m, 1)
    c_e = 2.0 * (8.0 * m * h) ** (problem.q1 / (1.0 - problem.q1))
    terms, kused = _intrinsic_terms(kernel, problem, candidates, kappa_provenance, kfields,
                                    policy=problem.options.diagonal_policy)
    rhs = c_e * (terms + problem.gsig0.values) + problem.H.values
    consts = {
        "c_upper_qm": {"value": c_e, "provenance": "analytic"},
        "h": {"value": h, "provenance": "analytic" if kernel.qm_constant is not None else "estimated"},
        "kappa": {"value": max(kused, default=0.0), "provenance": kappa_provenance},
    }
    return _finish("qm-intrinsic-upper", uv, rhs, problem.points, consts,
                   problem.options.diagonal_policy,
                   {"kappa_sup_per_term": kused, "m": m}, atol, rtol)


def check_qmm_bilateral(u, problem, modifier="ball-center-default", h_mod=None,
                        candidates=None, atol=ATOL, rtol=RTOL, kappa_provenance="estimated-lower"):
    """Matching bounds through a modifier m: with v = u/m, data sigma~_i = m^{1+q_i} sigma_i,
    sigma~_0 = m sigma_0, H~ = H/m, the transformed instance must satisfy both intrinsic
    bounds for the modified kernel G/(m m); mapped back they sandwich u between
    c m (...) + H on both sides.
    """
    from .kernels import ball_center_modifier, estimate_qm_constant, modify
    from .solver import Problem

    kernel = problem.kernel
    if isinstance(modifier, str):
        modifier_fn = ball_center_modifier(kernel)
        modifier_desc = "ball-center-default (implementation choice)"
    else:
        modifier_fn, modifier_desc = modifier, "user modifier"
    mvals = np.array([float(modifier_fn(p)) for p in problem.points])
    ker_mod = modify(kernel, modifier_fn)
    if h_mod is None:
        stride = max(1, len(problem.points) // 36)
        h_mod = estimate_qm_constant(ker_mod, problem.points[::stride])
        h_prov = "estimated-lower"
    else:
        h_prov = "analytic"
    ker_mod.qm_constant = max(h_mod, 0.5)
    ker_mod.wmp_constant = 2.0 * ker_mod.qm_constant
    meas_mod = [s.transform_modifier(modifier_fn, 1.0 + q)
                for q, s in zip(problem.exponents, problem.measures)]
    sigma0_mod = (problem.sigma0.transform_modifier(modifier_fn, 1.0)
                  if problem.sigma0.size else problem.sigma0)
    sub = Problem(ker_mod, problem.exponents, meas_mod, sigma0=sigma0_mod,
                  harmonic=problem.H.values / mvals, points=problem.points,
                  options=problem.options)
    vv = _values(u) / mvals
    kfields = [intrinsic_field(ker_mod, s, qi, sub.points, candidates)[0]
               for qi, s in zip(sub.exponents, sub.measures)]
    low = check_symmetric_lower(sub.field(vv), sub, kfields=kfields, candidates=candidates,
                                kappa_provenance=kappa_provenance, atol=atol, rtol=rtol)
    upp = check_qm_upper(sub.field(vv), sub, h=ker_mod.qm_constant, kfields=kfields,
                         candidates=candidates, kappa_provenance=kappa_provenance,
                         atol=atol, rtol=rtol)
    worst = np.nanmin([low.worst_slack, upp.worst_slack])
    status = "violated" if "violated" in (low.status, upp.status) else "holds"
    consts = {
        "h_modified": {"value": ker_mod.qm_constant, "provenance": h_prov},
        "b_modified": {"value": ker_mod.wmp_constant, "provenance": h_prov},
        "kappa": {"value": float("nan"), "provenance": kappa_provenance},
    }
    witness = low.witness if low.worst_slack <= (upp.worst_slack if np.isfinite(upp.worst_slack) else np.inf) else upp.witness
    return Certificate("modified-bilateral", consts, float(worst), witness, status,
                       _grade(consts), low.point_set, problem.options.diagonal_policy,
                       {"modifier": modifier_desc, "lower": low.to_json(), "upper": upp.to_json()})


def check_wmp(kernel, measure, b, eval_points, tol=1e-9):
    """Maximum-principle certificate: rescale so the potential is 1 on the support,
    then the potential must stay below b on the evaluation points.

    Bounded kernels use the exact diagonal; grid measures the cell average.
    Explicit atoms under a singular kernel are refused (the hypothesis
    `potential <= 1 on the support` cannot hold with an infinite self term).
    """
    if b < 1:
        raise ConfigurationError(f"maximum-principle constant must satisfy b >= 1, got {b}")
    if measure.is_zero:
        raise DegenerateMeasureError("the measure is zero; its potential vanishes on the support")
    if kernel.singular and measure.origin != "grid":
        raise ConfigurationError(
            "explicit atoms under a singular kernel have infinite self-potential; "
            "the maximum-principle hypothesis is vacuous (use a grid-quadrature measure)")
    policy = "cell-average" if kernel.singular else "exact"
    supp = potential(kernel, measure, measure.locations, policy).values
    smax = float(np.max(supp))
    if smax == 0.0:
        raise DegenerateMeasureError("the potential vanishes on the measure's support")
    if np.isinf(smax):
        raise DegenerateMeasureError("the potential is infinite on the support; cannot normalize")
    scaled = measure.scaled(1.0 / smax)
    ev = potential(kernel, scaled, eval_points, policy).values
    k = int(np.argmax(ev))
    reported = float(ev[k])
    consts = {"b": {"value": b, "provenance": "analytic"}}
    status = "holds" if reported <= b + tol * (1.0 + b) else "violated"
    return Certificate(
        "wmp", consts, float(b - reported), [float(c) for c in as_points(eval_points)[k]],
        status, "certificate", f"{len(as_points(eval_points))} evaluation points", policy,
        {"reported_max": reported, "support_max_before_scaling": smax},
    )


def residual(u, problem):
    """sup over the evaluation points of |u - T(u)|."""
    uv = _values(u)
    return float(np.max(np.abs(uv - problem.apply_map(uv))))


def batch_summary(certificates):
    """Aggregate rows (inequality_id, instances, min slack, violations) for CSV export."""
    rows = {}
    for c in certificates:
        r = rows.setdefault(c.inequality_id, {"inequality_id": c.inequality_id,
                                              "instances": 0, "min_slack": np.inf,
                                              "violations": 0, "not_applicable": 0})
        r["instances"] += 1
        if c.status == "not-applicable":
            r["not_applicable"] += 1
            continue
        r["min_slack"] = min(r["min_slack"], c.worst_slack)
        r["violations"] += int(c.status == "violated")
    out = []
    for r in rows.values():
        if r["min_slack"] is np.inf or r["min_slack"] == np.inf:
            r["min_slack"] = float("nan")
        out.append(r)
    return sorted(out, key=lambda r: r["inequality_id"])
