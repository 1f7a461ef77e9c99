"""Potentials of atomic measures, sup-norms, Kato diagnostics, harmonic parts.

The potential of an atomic measure is the exact finite sum
sum_k G(x, y_k) w_k; the only quadrature in the package happens when a measure
is built from a density. The diagonal (x equal to an atom) is governed by an
explicit policy:

* "exact":        use G(x, x), possibly +inf (flagged; the solver refuses such fields),
* "cell-average": replace G(x, x) by the exact mean of the kernel over a ball
                  with the originating grid cell's volume (grid measures only),
* "exclude":      drop the self atom (diagnostics only),
* "auto":         cell-average for grid measures, exact for explicit atoms.
"""

import numpy as np

from .errors import ConfigurationError, DomainError, NotApplicableError
from .geometry import as_points, coincidence_mask, sq_distances
from .measures import Region

__all__ = [
    "ScalarField",
    "BoundaryData",
    "potential",
    "potential_matrix",
    "sup_norm",
    "kato_modulus",
    "kato_tail",
    "harmonic_extension_ball",
]

DIAGONAL_POLICIES = ("auto", "exact", "cell-average", "exclude")


class ScalarField:
    """Nonnegative values over a shared evaluation point set.

    Arithmetic requires the *same* points object; fields over different point
    sets never combine. +inf entries are allowed but flag the field as not
    solver-admissible.
    """

    def __init__(self, points, values):
        self.points = points if isinstance(points, np.ndarray) else as_points(points)
        values = np.asarray(values, dtype=float)
        if values.shape == ():
            values = np.full(len(self.points), float(values))
        if values.shape != (len(self.points),):
            raise ConfigurationError(
                f"field has {values.shape} values for {len(self.points)} points"
            )
        if np.any(np.isnan(values)) or np.any(values < 0):
            raise ConfigurationError("field values must be nonnegative (NaN forbidden)")
        self.values = values

    @property
    def has_inf(self):
        return bool(np.any(np.isinf(self.values)))

    def with_values(self, values):
        return ScalarField(self.points, values)

    def _check_same_points(self, other):
        if self.points is not other.points and not np.array_equal(self.points, other.points):
            raise ConfigurationError("fields over different point sets never combine")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_points(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + float(other))

    __radd__ = __add__

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            self._check_same_points(c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __pow__(self, p):
        return self.with_values(self.values ** float(p))

    def sup(self):
        return float(np.max(self.values)) if len(self.values) else 0.0

    def to_csv(self, path, value_name="value"):
        """Write rows (point coordinates, value)."""
        import csv

        n = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(n)] + [value_name])
            for p, v in zip(self.points, self.values):
                w.writerow(list(map(float, p)) + [float(v)])
        return path

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"ScalarField({len(self)} points, sup={self.sup():.6g})"


def sup_norm(field):
    """Max over the evaluation points; the discrete proxy for the sup over the domain."""
    if isinstance(field, ScalarField):
        return field.sup()
    return float(np.max(np.asarray(field, float)))


def _resolve_policy(policy, measure):
    if policy not in DIAGONAL_POLICIES:
        raise ConfigurationError(f"unknown diagonal policy {policy!r}; expected one of {DIAGONAL_POLICIES}")
    if policy == "auto":
        return "cell-average" if measure.origin == "grid" else "exact"
    return policy


def kernel_matrix_capped(kernel, X, Y, cell_volume=None, policy="exact", cap_rows=False):
    """Kernel matrix (X x Y) with coincident pairs resolved by the diagonal policy.

    cap_rows=True averages over the X-side point instead of the Y-side one
    (irrelevant for exact coincidence, kept for clarity of intent).
    """
    X = as_points(X, kernel.domain.dim)
    Y = as_points(Y, kernel.domain.dim)
    G = kernel.matrix(X, Y)
    coincident = coincidence_mask(X, Y)
    if np.any(coincident):
        if policy == "exclude":
            G[coincident] = 0.0
        elif policy == "cell-average":
            if cell_volume is None:
                raise ConfigurationError(
                    "cell-average diagonal policy needs a grid-quadrature measure (no cell volume recorded)"
                )
            ii, jj = np.nonzero(coincident)
            for i, j in zip(ii, jj):
                at = X[i] if cap_rows else Y[j]
                G[i, j] = kernel.diagonal_average(at, cell_volume)
        # "exact": keep G(x, x) as evaluated (possibly +inf)
    return G


def potential_matrix(kernel, measure, points, policy="auto"):
    """Kernel matrix (points x atoms) with the diagonal policy applied to coincident pairs."""
    policy = _resolve_policy(policy, measure)
    return kernel_matrix_capped(kernel, points, measure.locations, measure.cell_volume, policy)


def potential(kernel, measure, points, policy="auto"):
    """Evaluate the potential of the measure at the given points (exact finite sum)."""
    points_arr = as_points(points, kernel.domain.dim)
    if measure.is_zero:
        out = np.zeros(len(points_arr))
    else:
        G = potential_matrix(kernel, measure, points_arr, policy)
        finite = np.isfinite(G)
        if np.all(finite):
            out = G @ measure.weights
        else:
            out = np.where(np.all(finite, axis=1), (np.where(finite, G, 0.0)) @ measure.weights, np.inf)
    pts = points if isinstance(points, np.ndarray) and points.ndim == 2 else points_arr
    return ScalarField(pts, out)


def kato_modulus(kernel, measure, radii, points, policy="auto"):
    """Decay table (r, omega(r)) of the local kernel mass of the measure.

    omega(r) = max over eval points x of the potential, at x, of the measure
    restricted to the open ball B(x, r). Uses the cell-average diagonal for
    grid measures; explicit atoms sitting on evaluation points are refused
    because point masses never exhibit the required small-ball decay under a
    singular kernel.
    """
    points = as_points(points, kernel.domain.dim)
    radii = sorted({float(r) for r in radii}, reverse=True)
    if any(r <= 0 for r in radii):
        raise ConfigurationError("radii must be positive")
    if measure.is_zero:
        return [(r, 0.0) for r in radii]
    coincident = coincidence_mask(points, measure.locations)
    if measure.origin == "atoms" and kernel.singular and np.any(coincident):
        raise ConfigurationError(
            "explicit atoms coincide with evaluation points under a singular kernel; "
            "point masses never satisfy the small-ball decay, use a grid-quadrature "
            "measure (cell-average diagonal) or move the evaluation points"
        )
    G = potential_matrix(kernel, measure, points, policy)
    d2 = sq_distances(points, measure.locations)
    out = []
    for r in radii:
        inside = d2 < r * r
        vals = (np.where(inside, G, 0.0)) @ measure.weights
        out.append((r, float(np.max(vals))))
    return out


def kato_table_to_csv(table, path):
    """Write a decay table [(r, omega)] as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "omega"])
        w.writerows([[float(r), float(om)] for r, om in table])
    return path


def kato_tail(kernel, measure, R_list, points, policy="auto"):
    """Far-field table (R, omega_inf(R)): potential of the restriction to |y| >= R.

    Only meaningful on unbounded domains.
    """
    if kernel.domain.bounded:
        raise NotApplicableError("the far-field diagnostic applies to unbounded domains only")
    points = as_points(points, kernel.domain.dim)
    R_list = sorted({float(R) for R in R_list})
    out = []
    for R in R_list:
        tail = measure.restrict(Region.outside_ball(np.zeros(kernel.domain.dim), R))
        if tail.is_zero:
            out.append((R, 0.0))
        else:
            out.append((R, sup_norm(potential(kernel, tail, points, policy))))
    return out


class BoundaryData:
    """Boundary trace f >= 0 on the sphere: zero, a constant, or a sampled function."""

    def __init__(self, kind, value=None, func=None, sup=None):
        if kind not in ("zero", "constant", "function"):
            raise ConfigurationError(f"unknown boundary data kind {kind!r}")
        if kind == "constant" and (value is None or value < 0):
            raise ConfigurationError("constant boundary data must be >= 0")
        self.kind = kind
        self.value = value
        self.func = func
        self._sup = sup

    @staticmethod
    def zero():
        return BoundaryData("zero", value=0.0, sup=0.0)

    @staticmethod
    def constant(c):
        return BoundaryData("constant", value=float(c), sup=float(c))

    @staticmethod
    def function(f, sup=None):
        return BoundaryData("function", func=f, sup=sup)

    def sample(self, nodes):
        if self.kind == "zero":
            return np.zeros(len(nodes))
        if self.kind == "constant":
            return np.full(len(nodes), self.value)
        vals = np.array([float(self.func(xi)) for xi in nodes])
        if np.any(vals < 0):
            raise ConfigurationError("boundary data must be nonnegative")
        return vals

    def sup_norm(self, nodes=None):
        """Sup of f; for sampled functions a proxy over the quadrature nodes."""
        if self._sup is not None:
            return self._sup
        if nodes is None:
            raise ConfigurationError("sampled boundary data needs quadrature nodes for its sup proxy")
        return float(np.max(self.sample(nodes)))


def sphere_nodes(domain, n_nodes=None):
    """Quadrature nodes and weights on the boundary sphere of a ball domain.

    n = 2: trapezoid on the circle (spectrally accurate). n = 3: product
    Gauss-Legendre (polar) x trapezoid (azimuth). Weights sum to 1, and the
    Poisson rows are renormalized on top of that, so constants reproduce exactly.
    """
    if domain.shape != "ball":
        raise ConfigurationError("sphere quadrature needs a ball domain")
    n, R, c = domain.dim, domain.radius, domain.center
    if n == 2:
        N = int(n_nodes or 256)
        theta = 2 * np.pi * np.arange(N) / N
        nodes = c + R * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(N, 1.0 / N)
    elif n == 3:
        N = int(n_nodes or 2048)
        L = max(int(round(np.sqrt(N / 2))), 4)
        mu, wmu = np.polynomial.legendre.leggauss(L)
        phi = 2 * np.pi * np.arange(2 * L) / (2 * L)
        s = np.sqrt(1 - mu**2)
        nodes = np.stack(
            [
                np.outer(s, np.cos(phi)).ravel(),
                np.outer(s, np.sin(phi)).ravel(),
                np.outer(mu, np.ones(2 * L)).ravel(),
            ],
            axis=1,
        )
        nodes = c + R * nodes
        weights = np.outer(wmu / 2.0, np.full(2 * L, 1.0 / (2 * L))).ravel()
    else:
        raise ConfigurationError("sphere quadrature supports n in {2, 3}")
    return nodes, weights


def harmonic_extension_ball(boundary, domain, points, n_nodes=None):
    """Harmonic extension of boundary data into a ball by the Poisson integral.

    Rows are normalized so constant data is reproduced exactly; evaluation
    points must lie strictly inside the ball.
    """
    points_arr = as_points(points, domain.dim)
    if domain.shape != "ball":
        raise ConfigurationError("harmonic extension is implemented for balls only")
    R, c = domain.radius, domain.center
    rel = points_arr - c
    r2 = np.sum(rel * rel, axis=1)
    if np.any(r2 >= R * R):
        k = int(np.argmax(r2))
        raise DomainError(
            f"evaluation point {points_arr[k].tolist()} is not strictly inside the ball (|x-c|={np.sqrt(r2[k]):.6g}, R={R})"
        )
    pts = points if isinstance(points, np.ndarray) and points.ndim == 2 else points_arr
    if boundary.kind == "zero":
        return ScalarField(pts, np.zeros(len(points_arr)))
    if boundary.kind == "constant":
        return ScalarField(pts, np.full(len(points_arr), boundary.value))
    nodes, w = sphere_nodes(domain, n_nodes)
    f = boundary.sample(nodes)
    d2 = sq_distances(points_arr, nodes)
    P = (R * R - r2)[:, None] / d2 ** (domain.dim / 2.0)
    P = P * w[None, :]
    row = np.sum(P, axis=1)
    vals = (P @ f) / row
    return ScalarField(pts, np.maximum(vals, 0.0))
