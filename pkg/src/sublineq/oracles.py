"""Independent verification oracles.

These deliberately avoid the fixed-point iteration they are used to check:
the solver oracle is a damped multistart Newton method on the full nonlinear
system, and the embedding-constant oracle is brute-force enumeration over a
simplex grid.
"""

import numpy as np

from .errors import ConfigurationError
from .geometry import as_points
from .potentials import potential_matrix

__all__ = ["newton_minimal_root", "simplex_grid_kappa"]


def newton_minimal_root(problem, seed=0, n_starts=8, tol=1e-12, max_newton=80):
    """Minimal nontrivial nonnegative root of u = T(u) by damped Newton with multistart.

    Builds the residual and Jacobian of the dense nonlinear system directly
    from the kernel matrices; returns the converged root of smallest sup-norm
    above the triviality threshold.
    """
    P = len(problem.points)
    mats = [potential_matrix(problem.kernel, s, problem.points, problem.options.diagonal_policy)
            for s in problem.measures]
    for M in mats:
        if not np.all(np.isfinite(M)):
            raise ConfigurationError("the Newton oracle needs finite kernel matrices")
    idxs = problem.atom_idx
    ws = [s.weights for s in problem.measures]
    qs = problem.exponents
    const = problem.gsig0.values + problem.H.values

    def residual(u):
        r = u - const
        for M, w, idx, q in zip(mats, ws, idxs, qs):
            r = r - M @ (w * u[idx] ** q)
        return r

    def jacobian(u):
        J = np.eye(P)
        for M, w, idx, q in zip(mats, ws, idxs, qs):
            J[:, idx] -= M * (w * q * u[idx] ** (q - 1.0))[None, :]
        return J

    from .solver import constants as _constants

    cst = _constants(problem)
    scale = max(cst.c_upper, 1.0)
    rng = np.random.default_rng(seed)
    starts = [np.full(P, cst.c_upper), np.full(P, 0.1 * scale)]
    while len(starts) < n_starts:
        starts.append(np.exp(rng.uniform(np.log(1e-3), np.log(max(scale, 1e-2)), P)))

    roots = []
    for u in starts:
        u = u.copy()
        for _ in range(max_newton):
            r = residual(u)
            if np.max(np.abs(r)) <= tol * scale:
                break
            try:
                step = np.linalg.solve(jacobian(u), -r)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            base = np.max(np.abs(r))
            for _ in range(30):
                un = u + t * step
                if np.all(un > 0) and np.max(np.abs(residual(un))) < base:
                    break
                t *= 0.5
            else:
                break  # damping stalled; abandon this start
            u = u + t * step
        if np.max(np.abs(residual(u))) <= tol * scale and np.all(u >= -1e-12 * scale):
            # two undamped polish steps; Newton is quadratic near the root
            for _ in range(2):
                try:
                    step = np.linalg.solve(jacobian(u), -residual(u))
                except np.linalg.LinAlgError:
                    break
                if np.any(u + step <= 0):
                    break
                u = u + step
            roots.append(np.maximum(u, 0.0))

    nontrivial = [u for u in roots if np.max(u) > 1e-6 * scale]
    if not nontrivial:
        raise ConfigurationError("the Newton oracle found no nontrivial nonnegative root")
    nontrivial.sort(key=lambda u: float(np.max(u)))
    return nontrivial[0]


def simplex_grid_kappa(kernel, sigma, q, candidates, steps=100, chunk=4096):
    """Brute-force lower bound for the embedding constant: enumerate the probability
    simplex over the candidates with the given grid resolution and maximize

        F(w) = ( sum_k sigma_k (G w)_k^q )^{1/q}.
    """
    candidates = as_points(candidates, kernel.domain.dim)
    J = len(candidates)
    if J < 1:
        raise ConfigurationError("need at least one candidate")
    G = kernel.matrix(sigma.locations, candidates)
    if not np.all(np.isfinite(G)):
        raise ConfigurationError("simplex oracle needs finite kernel values (drop coincident candidates)")
    sw = sigma.weights
    best = 0.0
    buf = []

    def flush(buf):
        nonlocal best
        W = np.array(buf, dtype=float) / steps
        g = G @ W.T  # (K, n_weights)
        F = (sw @ g**q) ** (1.0 / q)
        best = max(best, float(np.max(F)))

    for comp in _compositions(steps, J):
        buf.append(comp)
        if len(buf) >= chunk:
            flush(buf)
            buf = []
    if buf:
        flush(buf)
    return best


def _compositions(total, parts):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest
