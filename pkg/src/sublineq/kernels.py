"""Kernel construction and structural constants.

A kernel is a positive two-point function G(x, y), evaluated in bulk as a
matrix over point sets. Coincident pairs are first class: singular kernels
return +inf there (a deliberate extended value, never an overflow artifact)
and bounded matrix kernels return their stored diagonal.

Structural metadata travels with the kernel:

* symmetry class ("symmetric", "quasi-symmetric" with constant a >= 1, "unknown"),
* qm_constant h >= 1/2: quasi-triangle constant of d = 1/G,
* wmp_constant b >= 1: maximum-principle constant (potential <= b everywhere
  whenever it is <= 1 on the support of the measure).

Built-in kernels ship analytically known constants; user kernels get sampled
lower estimates or, for small point clouds, exact values by enumeration / LP.
"""

import itertools
import math

import numpy as np

from .errors import ConfigurationError, DegenerateKernelError, DomainError, EvaluationError
from .geometry import (
    as_points,
    ball_radius_for_volume,
    coincidence_mask,
    match_rows,
    row_index_map,
    sq_distances,
)

__all__ = [
    "Domain",
    "Kernel",
    "riesz_kernel",
    "green_ball_kernel",
    "matrix_kernel",
    "modify",
    "symmetrize",
    "estimate_qm_constant",
    "qs_constant_exact",
    "wmp_constant_exact",
    "check_wmp",
]


class Domain:
    """Domain descriptor: full space, a ball, or an explicit point cloud."""

    def __init__(self, dim, shape, bounded, center=None, radius=None, points=None):
        if dim < 1:
            raise ConfigurationError(f"domain dimension must be >= 1, got {dim}")
        if shape not in ("full-space", "ball", "point-cloud"):
            raise ConfigurationError(f"unknown domain shape {shape!r}")
        if shape == "ball":
            if radius is None or radius <= 0:
                raise ConfigurationError(f"ball radius must be > 0, got {radius}")
            center = np.zeros(dim) if center is None else as_points(center, dim)[0]
        if shape == "point-cloud" and points is None:
            raise ConfigurationError("point-cloud domains carry an explicit finite point list")
        self.dim = int(dim)
        self.shape = shape
        self.bounded = bool(bounded)
        self.center = center
        self.radius = radius
        self.points = points

    @staticmethod
    def full_space(dim):
        return Domain(dim, "full-space", bounded=False)

    @staticmethod
    def ball(dim, center, radius):
        return Domain(dim, "ball", bounded=True, center=center, radius=radius)

    @staticmethod
    def point_cloud(points):
        points = as_points(points)
        return Domain(points.shape[1], "point-cloud", bounded=True, points=points)

    def __repr__(self):
        if self.shape == "ball":
            return f"Domain(ball, n={self.dim}, center={self.center.tolist()}, R={self.radius})"
        if self.shape == "point-cloud":
            return f"Domain(point-cloud, n={self.dim}, N={len(self.points)})"
        return f"Domain(full-space, n={self.dim})"


class Kernel:
    """Base kernel. Subclasses implement _raw_matrix and (optionally) diagonal_average."""

    singular = True  # G(x, x) = +inf

    def __init__(self, domain, symmetry="symmetric", qs_constant=None,
                 qm_constant=None, wmp_constant=None, modifier=None, name="kernel"):
        if qs_constant is not None and qs_constant < 1:
            raise ConfigurationError(f"quasi-symmetry constant a must be >= 1, got {qs_constant}")
        if qm_constant is not None and qm_constant < 0.5:
            raise ConfigurationError(f"quasi-metric constant h must be >= 1/2, got {qm_constant}")
        if wmp_constant is not None and wmp_constant < 1:
            raise ConfigurationError(f"maximum-principle constant b must be >= 1, got {wmp_constant}")
        self.domain = domain
        self.symmetry = symmetry
        self.qs_constant = qs_constant
        self.qm_constant = qm_constant
        self.wmp_constant = wmp_constant
        self.modifier = modifier
        self.name = name

    # -- evaluation ---------------------------------------------------------

    def matrix(self, X, Y):
        """Kernel values over all pairs (x in X, y in Y), exact diagonal semantics."""
        X = as_points(X, self.domain.dim)
        Y = as_points(Y, self.domain.dim)
        return self._raw_matrix(X, Y)

    def __call__(self, x, y):
        return float(self.matrix(as_points(x), as_points(y))[0, 0])

    def _raw_matrix(self, X, Y):
        raise NotImplementedError

    def diagonal_average(self, y, cell_volume):
        """Exact mean of G(., y) over a ball of the given volume centered at y.

        Used as the cell-average diagonal value for grid-quadrature measures.
        """
        raise EvaluationError(
            f"{self.name} has no closed-form cell average; use exact or exclude diagonal policy"
        )

    def check_in_domain(self, X):
        """Raise DomainError if any point lies outside the kernel's domain."""
        return None


class RieszKernel(Kernel):
    """G(x, y) = |x - y|^(2*alpha - n) on R^n, 0 < alpha < n/2."""

    def __init__(self, n, alpha):
        if n < 2:
            raise ConfigurationError(f"dimension must satisfy n >= 2, got n={n}")
        if not (0 < alpha < n / 2):
            raise ConfigurationError(f"order must satisfy 0 < alpha < n/2 = {n / 2}, got alpha={alpha}")
        b = 2.0 ** (n - 2 * alpha)
        super().__init__(
            Domain.full_space(n),
            symmetry="symmetric",
            qm_constant=max(0.5, 2.0 ** (n - 2 * alpha - 1)),
            wmp_constant=b,
            name=f"riesz(n={n}, alpha={alpha})",
        )
        self.n = int(n)
        self.alpha = float(alpha)
        self.exponent = 2 * alpha - n  # < 0

    def _raw_matrix(self, X, Y):
        d2 = sq_distances(X, Y)
        zero = coincidence_mask(X, Y, d2)
        with np.errstate(divide="ignore"):
            out = d2 ** (self.exponent / 2.0)
        out[zero] = np.inf
        # near-coincident pairs that are not exactly equal keep their huge finite value
        near = (d2 == 0.0) & ~zero
        if np.any(near):
            ii, jj = np.nonzero(near)
            for i, j in zip(ii, jj):
                d = np.linalg.norm(X[i] - Y[j])
                out[i, j] = np.inf if d == 0.0 else d**self.exponent
        return out

    def diagonal_average(self, y, cell_volume):
        rc = ball_radius_for_volume(cell_volume, self.n)
        return (self.n / (2.0 * self.alpha)) * rc**self.exponent


class GreenBallKernel(Kernel):
    """Classical Green function of the ball for the Laplacian, -Lap G(., y) = delta_y.

    n = 3 uses the reflection form (1/4pi)(1/|x-y| - 1/t), n = 2 the logarithmic
    form (1/2pi) log(t/|x-y|), with t = |y - c| |x - y*| / R written in the
    reflection-free stable form t^2 = |x-c|^2 |y-c|^2 / R^2 - 2 (x-c).(y-c) + R^2.
    """

    def __init__(self, n, center, radius):
        if n not in (2, 3):
            raise ConfigurationError(f"ball Green kernel supports n in {{2, 3}}, got n={n}")
        if radius <= 0:
            raise ConfigurationError(f"ball radius must be > 0, got {radius}")
        center = as_points(center, n)[0]
        super().__init__(
            Domain.ball(n, center, radius),
            symmetry="symmetric",
            wmp_constant=1.0,  # strong maximum principle
            name=f"green_ball(n={n}, R={radius})",
        )
        self.n = int(n)

    def check_in_domain(self, X):
        X = as_points(X, self.domain.dim)
        r2 = np.sum((X - self.domain.center) ** 2, axis=1)
        lim = self.domain.radius**2 * (1 + 1e-12)
        if np.any(r2 > lim):
            k = int(np.argmax(r2))
            raise DomainError(
                f"point {X[k].tolist()} lies outside the closed ball of radius {self.domain.radius}"
            )

    def _raw_matrix(self, X, Y):
        self.check_in_domain(X)
        self.check_in_domain(Y)
        R = self.domain.radius
        Xc = X - self.domain.center
        Yc = Y - self.domain.center
        d2 = sq_distances(Xc, Yc)
        t2 = (
            np.sum(Xc * Xc, axis=1)[:, None] * np.sum(Yc * Yc, axis=1)[None, :] / R**2
            - 2.0 * (Xc @ Yc.T)
            + R**2
        )
        np.maximum(t2, 0.0, out=t2)
        zero = coincidence_mask(Xc, Yc, d2)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.n == 3:
                out = (1.0 / (4.0 * np.pi)) * (1.0 / np.sqrt(d2) - 1.0 / np.sqrt(t2))
            else:
                out = (1.0 / (4.0 * np.pi)) * np.log(t2 / d2)
        out[zero] = np.inf
        # coincident points on the boundary sphere: the Green function vanishes there
        if np.any(zero):
            rr = np.sum(Xc * Xc, axis=1)
            on_bdy = np.abs(np.sqrt(rr) - R) <= 1e-12 * R
            out[zero & on_bdy[:, None]] = 0.0
        np.maximum(out, 0.0, out=out)
        return out

    def diagonal_average(self, y, cell_volume):
        y = as_points(y, self.domain.dim)[0]
        R = self.domain.radius
        rho2 = float(np.sum((y - self.domain.center) ** 2))
        rc = ball_radius_for_volume(cell_volume, self.n)
        gap = max(R**2 - rho2, 0.0)
        if gap == 0.0:
            return 0.0
        if self.n == 3:
            # mean of the fundamental part over the cell ball, minus the regular part at y
            val = (1.0 / (4.0 * np.pi)) * (1.5 / rc) - (1.0 / (4.0 * np.pi)) * R / gap
        else:
            val = (1.0 / (2.0 * np.pi)) * (math.log(1.0 / rc) + 0.5 + math.log(gap / R))
        return max(val, 0.0)


class MatrixKernel(Kernel):
    """Dense kernel on an explicit point cloud; values given as a square matrix."""

    def __init__(self, points, values):
        points = as_points(points)
        values = np.asarray(values, dtype=float)
        N = len(points)
        if values.shape != (N, N):
            raise ConfigurationError(f"kernel matrix shape {values.shape} does not match {N} points")
        off = ~np.eye(N, dtype=bool)
        if np.any(values[off] <= 0) or np.any(np.isnan(values)):
            raise ConfigurationError("matrix kernel needs positive off-diagonal entries")
        if np.any(values[~off] <= 0):
            raise ConfigurationError("matrix kernel diagonal entries must be positive (possibly +inf)")
        symmetry, a = _infer_symmetry(values)
        super().__init__(
            Domain.point_cloud(points),
            symmetry=symmetry,
            qs_constant=a,
            name=f"matrix({N} points)",
        )
        self.values = values
        self._index = row_index_map(points)

    @property
    def singular(self):
        return bool(np.any(np.isinf(np.diag(self.values))))

    def _indices(self, X):
        idx = match_rows(X, self._index)
        for i, k in enumerate(idx):
            if k is None:
                raise DomainError(f"point {X[i].tolist()} is not in the kernel's point cloud")
        return np.asarray(idx, dtype=int)

    def _raw_matrix(self, X, Y):
        return self.values[np.ix_(self._indices(X), self._indices(Y))].copy()

    def check_in_domain(self, X):
        self._indices(as_points(X, self.domain.dim))


def _infer_symmetry(values):
    if np.array_equal(values, values.T):
        return "symmetric", None
    off = ~np.eye(len(values), dtype=bool)
    A, B = values[off], values.T[off]
    both_inf = np.isinf(A) & np.isinf(B)
    one_inf = np.isinf(A) ^ np.isinf(B)
    if np.any(one_inf):
        return "unknown", None
    ratios = np.ones_like(A)
    fin = ~both_inf
    ratios[fin] = A[fin] / B[fin]
    return "quasi-symmetric", float(np.max(ratios))


class ModifiedKernel(Kernel):
    """G~(x, y) = G(x, y) / (m(x) m(y)) for a positive modifier m."""

    def __init__(self, base, modifier):
        super().__init__(
            base.domain,
            symmetry=base.symmetry,
            qs_constant=base.qs_constant,
            # structural constants do not survive modification; re-estimate
            qm_constant=None,
            wmp_constant=None,
            modifier=modifier,
            name=f"modified[{base.name}]",
        )
        self.base = base

    @property
    def singular(self):
        return self.base.singular

    def _modifier_values(self, X):
        vals = np.array([float(self.modifier(x)) for x in X])
        bad = ~(vals > 0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise EvaluationError(
                f"modifier is nonpositive ({vals[k]}) at point {X[k].tolist()}",
                witness=X[k].tolist(),
            )
        return vals

    def _raw_matrix(self, X, Y):
        mx = self._modifier_values(X)
        my = self._modifier_values(Y)
        return self.base._raw_matrix(X, Y) / (mx[:, None] * my[None, :])

    def diagonal_average(self, y, cell_volume):
        m = self._modifier_values(as_points(y, self.domain.dim))[0]
        return self.base.diagonal_average(y, cell_volume) / (m * m)

    def check_in_domain(self, X):
        self.base.check_in_domain(X)


class SymmetrizedKernel(Kernel):
    """G_s(x, y) = G(x, y) + G(y, x); symmetric by construction.

    If the base is quasi-symmetric with constant a and satisfies the maximum
    principle with b, the symmetrized kernel satisfies it with a * b
    (sandwich (1 + 1/a) G <= G_s <= (1 + a) G).
    """

    def __init__(self, base):
        if base.symmetry == "symmetric":
            b = base.wmp_constant
        elif base.symmetry == "quasi-symmetric" and base.wmp_constant is not None and base.qs_constant:
            b = base.qs_constant * base.wmp_constant
        else:
            b = None
        super().__init__(
            base.domain,
            symmetry="symmetric",
            wmp_constant=b,
            name=f"symmetrized[{base.name}]",
        )
        self.base = base

    @property
    def singular(self):
        return self.base.singular

    def _raw_matrix(self, X, Y):
        return self.base._raw_matrix(X, Y) + self.base._raw_matrix(Y, X).T

    def diagonal_average(self, y, cell_volume):
        return 2.0 * self.base.diagonal_average(y, cell_volume)

    def check_in_domain(self, X):
        self.base.check_in_domain(X)


# -- constructors -----------------------------------------------------------


def riesz_kernel(n, alpha):
    return RieszKernel(n, alpha)


def green_ball_kernel(n, center=None, radius=1.0):
    center = np.zeros(n) if center is None else center
    return GreenBallKernel(n, center, radius)


def matrix_kernel(points, values):
    return MatrixKernel(points, values)


def modify(kernel, modifier):
    return ModifiedKernel(kernel, modifier)


def symmetrize(kernel):
    return SymmetrizedKernel(kernel)


def ball_center_modifier(kernel):
    """Default modifier for ball Green kernels: m(x) = G(x, center).

    An implementation choice (no canonical modifier is prescribed for bounded
    domains); certificates that rely on it say so.
    """
    if kernel.domain.shape != "ball":
        raise ConfigurationError("the default modifier needs a ball domain")
    center = kernel.domain.center.reshape(1, -1)

    def m(x):
        return float(kernel.matrix(np.asarray(x, float).reshape(1, -1), center)[0, 0])

    return m


# -- structural constants ---------------------------------------------------


def estimate_qm_constant(kernel, sample_points):
    """Sampled lower estimate of the quasi-triangle constant of d = 1/G.

    Returns max over sampled triples of d(x,y) / (d(x,z) + d(z,y)), clamped
    below at 1/2. Monotone nondecreasing in the sample set.
    """
    if kernel.symmetry != "symmetric":
        raise ConfigurationError("quasi-metric estimation expects a symmetric kernel")
    X = as_points(sample_points, kernel.domain.dim)
    G = kernel.matrix(X, X)
    with np.errstate(divide="ignore"):
        d = 1.0 / G
    d[np.isinf(G)] = 0.0
    if not np.any(d > 0):
        raise DegenerateKernelError("all sampled kernel distances are zero")
    N = len(X)
    if N < 3:
        return 0.5
    # ratio[i,j,k] = d(i,j) / (d(i,k) + d(k,j)) over distinct ordered triples
    denom = d[:, None, :] + d.T[None, :, :]  # (i, j, k)
    numer = d[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numer / denom
    ii = np.arange(N)
    ratio[ii, ii, :] = 0.0
    ratio[ii, :, ii] = 0.0
    ratio[:, ii, ii] = 0.0
    ratio[~np.isfinite(ratio)] = 0.0
    return max(0.5, float(np.max(ratio)))


def qs_constant_exact(kernel, points=None):
    """Exact quasi-symmetry constant over a point set (the full cloud for matrix kernels)."""
    if isinstance(kernel, MatrixKernel) and points is None:
        sym, a = _infer_symmetry(kernel.values)
    else:
        X = as_points(points, kernel.domain.dim)
        sym, a = _infer_symmetry(kernel.matrix(X, X))
    if sym == "symmetric":
        return 1.0
    if a is None:
        raise DegenerateKernelError("kernel is not quasi-symmetric on the given points")
    return a


def wmp_constant_exact(kernel, points=None, _subset_cap=12):
    """Exact maximum-principle constant of a bounded kernel on a small point cloud.

    For every support subset S, the extremal admissible measure solves the LP
    maximize (G w)(x0) subject to (G w)|_S <= 1, w >= 0 supported on S; the
    constant is the max over subsets and targets x0. Exponential in the cloud
    size, intended for oracle use at N <= ~10.
    """
    from scipy.optimize import linprog

    if points is None:
        if not isinstance(kernel, MatrixKernel):
            raise ConfigurationError("wmp_constant_exact needs an explicit point set for non-matrix kernels")
        V = kernel.values
    else:
        X = as_points(points, kernel.domain.dim)
        V = kernel.matrix(X, X)
    N = len(V)
    if N > _subset_cap:
        raise ConfigurationError(f"exact maximum-principle search is exponential; N={N} > {_subset_cap}")
    if np.any(np.isinf(V)):
        raise ConfigurationError("exact maximum-principle search needs a bounded kernel (finite diagonal)")
    best = 1.0
    for size in range(1, N + 1):
        for S in itertools.combinations(range(N), size):
            S = list(S)
            A = V[np.ix_(S, S)]
            for t in range(N):
                c = -V[t, S]
                res = linprog(c, A_ub=A, b_ub=np.ones(len(S)), bounds=(0, None), method="highs")
                if res.status == 0:
                    best = max(best, -res.fun)
    return float(best)


def qm_constant_exact(kernel, points):
    """Exact quasi-triangle constant over a finite point set (full triple enumeration)."""
    return estimate_qm_constant(kernel, points)


def check_wmp(kernel, measure, b, eval_points, tol=1e-9):
    """Maximum-principle certificate; see the certify module for the implementation."""
    from .certify import check_wmp as _impl

    return _impl(kernel, measure, b, eval_points, tol=tol)
