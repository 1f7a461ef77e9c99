"""Localized embedding constants kappa(B) and the intrinsic potential.

kappa(B) is the least constant c with || G nu ||_{L^q(sigma_B)} <= c ||nu||
over nonnegative measures nu. Relaxed to nu supported on a finite candidate
set, the problem becomes maximizing

    F(w) = ( sum_k sigma_k ( sum_j w_j G(z_k, y_j) )^q )^{1/q}

over probability weights w. For 0 < q < 1 the q-power sum is concave on the
nonnegative orthant and F is positively 1-homogeneous; a multiplicative
minorize-maximize ascent (w_j proportional to w_j grad_j^{1/(1-q)}, from
Jensen on the concave power) climbs monotonically to the global maximum, and
Euler's identity grad . w = F makes max_j grad_j a certified dual bound at
every iterate. The attained value is a certified lower bound on kappa over the
candidate set; when the kernel's domain IS the candidate cloud the relaxation
is exact.

The intrinsic potential of an atomic measure,

    K sigma(x) = integral_0^inf kappa(B_G(x, r))^{q/(1-q)} / r^2 dr,

is a piecewise closed form: kappa(B_G(x, .)) is a nondecreasing step function
of r with jumps exactly where an atom enters the kernel ball, so the integral
between breakpoints is kappa^e (1/a - 1/b).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import as_points
from .measures import AtomicMeasure, Region

__all__ = [
    "KappaResult",
    "IntrinsicResult",
    "kernel_ball",
    "kappa",
    "intrinsic_potential",
    "intrinsic_field",
]


def kernel_ball(kernel, x, r, candidate_points=None):
    """Region {y : G(x, y) > 1/r}; for the Riesz kernel of order one this is B(x, r)."""
    if r <= 0:
        raise ConfigurationError(f"kernel-ball radius must be > 0, got {r}")
    x = as_points(x, kernel.domain.dim)

    def pred(pts):
        g = kernel.matrix(x, pts)[0]
        return g > 1.0 / r

    region = Region(pred, f"kernel-ball(x={x[0].tolist()}, r={r})")
    if candidate_points is not None:
        region.members = region.contains(candidate_points)
    return region


@dataclass
class KappaResult:
    kappa: float
    maximizer: AtomicMeasure
    status: str                      # "converged" | "iteration-capped" | "trivial"
    region: str
    weights: np.ndarray = None       # candidate-aligned probability weights
    iterations: int = 0
    dual_bound: float = float("nan")  # certified upper bound over the candidate set
    excluded_candidates: int = 0
    notes: list = field(default_factory=list)


def kappa(kernel, sigma, region, q, candidates, max_iter=500, tol=1e-8, warm_start=None):
    """Maximize the localized embedding ratio over measures on the candidate set."""
    if not (0 < q < 1):
        raise ConfigurationError(f"exponent must satisfy 0 < q < 1, got {q}")
    candidates = as_points(candidates, kernel.domain.dim)
    if len(candidates) == 0:
        raise ConfigurationError("candidate set must be nonempty")
    restricted = sigma.restrict(region) if region is not None else sigma
    desc = getattr(region, "description", "given measure") if region is not None else "whole measure"
    if restricted.is_zero:
        w = np.zeros(len(candidates))
        w[0] = 1.0
        return KappaResult(0.0, AtomicMeasure(candidates, w, merge=False), "trivial", desc,
                           weights=w, dual_bound=0.0, notes=["region contains no atoms"])
    G = _measure_matrix(kernel, restricted, candidates)
    keep = ~np.any(np.isinf(G), axis=0)
    excluded = int(np.sum(~keep))
    notes = []
    if excluded:
        notes.append(f"excluded {excluded} candidate(s) coinciding with atoms (infinite kernel value)")
    if not np.any(keep):
        return KappaResult(float("inf"), AtomicMeasure(candidates, np.zeros(len(candidates)), merge=False),
                           "trivial", desc, weights=np.zeros(len(candidates)),
                           excluded_candidates=excluded,
                           notes=notes + ["every candidate hits an atom"])
    Gk = G[:, keep]
    w0 = None
    if warm_start is not None:
        w0 = np.asarray(warm_start, float)[keep]
        s = w0.sum()
        w0 = w0 / s if s > 0 else None
    wk, value, dual, status, iters = _maximize_simplex(Gk, restricted.weights, q, max_iter, tol, w0)
    w = np.zeros(len(candidates))
    w[keep] = wk
    return KappaResult(value, AtomicMeasure(candidates, w, merge=False), status, desc,
                       weights=w, iterations=iters, dual_bound=dual,
                       excluded_candidates=excluded, notes=notes)


def _measure_matrix(kernel, sigma, X):
    """Kernel matrix (atoms x X) under the measure's natural diagonal policy.

    Grid measures live on the capped kernel (cell-average at coincidences),
    which is exactly the kernel matrix of the discrete system being solved;
    explicit atoms keep exact values (+inf at coincidences, handled upstream).
    """
    from .potentials import kernel_matrix_capped

    policy = "cell-average" if sigma.origin == "grid" else "exact"
    return kernel_matrix_capped(kernel, sigma.locations, X, sigma.cell_volume, policy,
                                cap_rows=True)


def _objective(g, sw, q):
    return float(np.sum(sw * g**q)) ** (1.0 / q)


def _maximize_simplex(G, sw, q, max_iter, tol, w0=None):
    """Ascend the concave 1-homogeneous objective on the simplex.

    Multiplicative minorize-maximize step: Jensen on the concave q-power gives
    the tight minorizer sum_j A_j (w'_j / w_j)^q, whose simplex maximizer is
    w'_j proportional to w_j * grad_j^{1/(1-q)}. Each step ascends, the limit
    is the global maximum (concavity), and Euler's identity grad . w = F makes
    max_j grad_j a certified dual bound at every iterate, stopping when the
    gap falls below tol * F. A conditional-gradient fallback handles iterates
    whose multiplicative step stalls because of zero entries.
    """
    K, J = G.shape
    rows_live = np.any(G > 0, axis=1)
    if not np.all(rows_live):
        G = G[rows_live]
        sw = sw[rows_live]
        if G.shape[0] == 0:
            w = np.zeros(J)
            w[0] = 1.0
            return w, 0.0, 0.0, "converged", 0
    dirac_vals = (sw @ G**q) ** (1.0 / q)
    best_dirac = float(np.max(dirac_vals))
    if best_dirac == 0.0:
        w = np.zeros(J)
        w[0] = 1.0
        return w, 0.0, 0.0, "converged", 0
    if w0 is not None:
        w = np.maximum(np.asarray(w0, float), 1e-16)
    else:
        w = np.full(J, 1.0 / J)
        w[int(np.argmax(dirac_vals))] += 1.0
    w = w / w.sum()
    g = G @ w
    F = _objective(g, sw, q)
    dual = np.inf
    status = "iteration-capped"
    expo = 1.0 / (1.0 - q)
    it = 0
    for it in range(1, max_iter + 1):
        S = float(np.sum(sw * g**q))
        grad = S ** (1.0 / q - 1.0) * (G.T @ (sw * g ** (q - 1.0)))
        gmax = float(np.max(grad))
        dual = min(dual, gmax)  # F* <= max_j grad_j by concavity + homogeneity
        if gmax - F <= tol * max(F, 1e-300):
            status = "converged"
            break
        ratio = np.maximum(grad / F, 0.0)
        w = w * ratio**expo
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            # fall back to one conditional-gradient step toward the best vertex
            j = int(np.argmax(grad))
            w = np.full(J, 1e-16)
            w[j] = 1.0
            total = w.sum()
        w = w / total
        g = G @ w
        F = _objective(g, sw, q)
    if best_dirac >= F:
        # the reported value never falls below the best single-Dirac candidate
        w = np.zeros(J)
        w[int(np.argmax(dirac_vals))] = 1.0
        F = best_dirac
    return w, F, float(min(dual, np.inf)), status, it


@dataclass
class IntrinsicResult:
    value: float                 # exact integral over [r_min, r_max]
    head_bound: float            # bound on the truncated head piece (0 when r_min is below the first jump)
    tail_value: float            # kappa(r_max)^e / r_max; exact remainder when r_max covers all jumps
    tail_exact: bool
    breakpoints: np.ndarray
    kappas: np.ndarray           # kappa on each segment between timeline points
    timeline: np.ndarray
    status: str
    notes: list = field(default_factory=list)

    @property
    def value_with_tail(self):
        return self.value + self.tail_value


def intrinsic_potential(kernel, sigma, q, x, candidates, r_min=None, r_max=None,
                        max_iter=500, tol=1e-8):
    """Intrinsic potential at x of an atomic measure, integrated exactly between breakpoints.

    Returns +inf (with a note) when x carries an atom of a singular kernel:
    the kernel ball then contains that atom for every r > 0 and the r^-2
    weight makes the head integral diverge. The atom-by-candidate kernel
    matrix is built once and sliced per segment; each segment warm-starts from
    the previous maximizer (kappa is monotone along the segments).
    """
    if not (0 < q < 1):
        raise ConfigurationError(f"exponent must satisfy 0 < q < 1, got {q}")
    x = as_points(x, kernel.domain.dim)
    candidates = as_points(candidates, kernel.domain.dim)
    empty = IntrinsicResult(0.0, 0.0, 0.0, True, np.zeros(0), np.zeros(0), np.zeros(0), "converged")
    if sigma.is_zero:
        return empty
    gx = _measure_matrix(kernel, sigma, x)[:, 0]
    if np.any(np.isinf(gx)):
        return IntrinsicResult(
            float("inf"), 0.0, 0.0, True, np.zeros(0), np.zeros(0), np.zeros(0), "infinite",
            notes=["atomic measures have infinite intrinsic potential for singular kernels "
                   "(an atom sits at the evaluation point)"],
        )
    reach = gx > 0  # atoms the kernel ball can ever capture
    if not np.any(reach):
        return empty
    breakpoints = np.unique(1.0 / gx[reach])
    if r_min is None:
        r_min = 0.9 / float(np.max(gx[reach]))
    if r_max is None:
        r_max = 10.0 * float(np.max(1.0 / gx[reach]))
    if not (0 < r_min < r_max):
        raise ConfigurationError(f"need 0 < r_min < r_max, got [{r_min}, {r_max}]")

    timeline = np.concatenate([[r_min], breakpoints[(breakpoints > r_min) & (breakpoints < r_max)], [r_max]])
    exp = q / (1.0 - q)
    sigma_reach = sigma.restrict_mask(reach)
    bp_of_atom = 1.0 / gx[reach]

    G_all = _measure_matrix(kernel, sigma_reach, candidates)
    keep = ~np.any(np.isinf(G_all), axis=0)
    notes = []
    if not np.all(keep):
        notes.append(f"excluded {int(np.sum(~keep))} candidate(s) coinciding with atoms")
        G_all = G_all[:, keep]
        if G_all.shape[1] == 0:
            raise ConfigurationError("every candidate coincides with an atom of a singular kernel")
    sw_all = sigma_reach.weights

    value = 0.0
    kappas = []
    status = "converged"
    warm = None
    kappa_last = 0.0
    for a, b in zip(timeline[:-1], timeline[1:]):
        active = bp_of_atom <= a  # atom enters once r exceeds its breakpoint
        if not np.any(active):
            kappas.append(0.0)
            continue
        warm_in = warm / warm.sum() if warm is not None and warm.sum() > 0 else None
        w, val, _, st, _ = _maximize_simplex(G_all[active], sw_all[active], q,
                                             max_iter, tol, warm_in)
        warm = w
        if st == "iteration-capped":
            status = "iteration-capped"
        kappa_last = val
        kappas.append(val)
        value += val**exp * (1.0 / a - 1.0 / b)
    kappas = np.asarray(kappas)

    # truncation report
    head = 0.0
    first_bp = float(breakpoints[0])
    if r_min > first_bp:
        k_at_rmin = kappas[0] if len(kappas) else 0.0
        head = k_at_rmin**exp * (1.0 / first_bp - 1.0 / r_min)
        notes.append("r_min truncates part of the head; bound uses kappa monotonicity")
    covered = r_max >= float(breakpoints[-1])
    if covered and len(kappas) and bool(np.all(bp_of_atom <= timeline[-2])):
        tail = kappa_last**exp / r_max
    else:
        active = bp_of_atom < r_max
        if np.any(active):
            warm_in = warm / warm.sum() if warm is not None and warm.sum() > 0 else None
            _, val, _, _, _ = _maximize_simplex(G_all[active], sw_all[active], q,
                                                max_iter, tol, warm_in)
        else:
            val = 0.0
        tail = val**exp / r_max
    if not covered:
        notes.append("r_max is below the last breakpoint; the tail value is a partial lower estimate")
    return IntrinsicResult(value, head, tail, covered, breakpoints, kappas, timeline, status, notes)


def intrinsic_field(kernel, sigma, q, points, candidates=None, include_tail=False,
                    max_iter=150, tol=1e-7, **kw):
    """Intrinsic-potential values over a point set (a ScalarField) plus per-point results.

    Field sweeps default to a lighter iteration budget than a single kappa
    call: the attained values are certified lower bounds at any budget, which
    is the sound direction everywhere a field of K values is consumed.
    """
    from .potentials import ScalarField

    points_arr = as_points(points, kernel.domain.dim)
    if candidates is None:
        candidates = np.vstack([sigma.locations, points_arr]) if not sigma.is_zero else points_arr
    results = [intrinsic_potential(kernel, sigma, q, p, candidates,
                                   max_iter=max_iter, tol=tol, **kw) for p in points_arr]
    vals = np.array([(r.value_with_tail if include_tail else r.value) for r in results])
    pts = points if isinstance(points, np.ndarray) and points.ndim == 2 else points_arr
    return ScalarField(pts, vals), results
