"""Finite atomic measures and regions.

Every measure is a finite list of (location, weight >= 0) atoms, either given
explicitly or produced by midpoint quadrature of a density on a regular grid.
Grid-born measures remember their cell volume, which downstream code needs for
the cell-average diagonal treatment of singular kernels.
"""

import numpy as np

from .errors import ConfigurationError, EvaluationError
from .geometry import as_points, row_index_map

__all__ = [
    "AtomicMeasure",
    "Region",
    "RegularGrid",
    "from_atoms",
    "from_density",
    "restrict",
    "transform_modifier",
    "grid_box",
    "grid_ball",
]


class AtomicMeasure:
    """Nonnegative finite atomic measure. Atoms at identical coordinates are merged exactly."""

    def __init__(self, locations, weights, origin="atoms", cell_volume=None, merge=True):
        locations = as_points(locations) if len(locations) else np.zeros((0, 1))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(weights) != len(locations):
            raise ConfigurationError("number of weights does not match number of atom locations")
        if np.any(weights < 0):
            k = int(np.argmin(weights))
            raise ConfigurationError(f"negative atom weight {weights[k]} at index {k}")
        if merge and len(locations):
            locations, weights = _merge_exact(locations, weights)
        keep = weights > 0
        self.locations = locations[keep] if len(locations) else locations
        self.weights = weights[keep] if len(weights) else weights
        if origin not in ("atoms", "grid"):
            raise ConfigurationError(f"unknown measure origin {origin!r}")
        if origin == "grid" and cell_volume is None:
            raise ConfigurationError("grid-origin measures must record their cell volume")
        self.origin = origin
        self.cell_volume = cell_volume

    @property
    def size(self):
        return len(self.weights)

    @property
    def mass(self):
        return float(np.sum(self.weights))

    @property
    def is_zero(self):
        return self.size == 0

    @property
    def dim(self):
        return self.locations.shape[1] if self.locations.size else None

    def scaled(self, c):
        if c < 0:
            raise ConfigurationError("measures scale by nonnegative factors only")
        return AtomicMeasure(self.locations, self.weights * c, self.origin, self.cell_volume, merge=False)

    def restrict(self, region):
        """Keep exactly the atoms whose locations satisfy the region predicate."""
        if self.is_zero:
            return self
        mask = region.contains(self.locations)
        return self.restrict_mask(mask)

    def restrict_mask(self, mask):
        mask = np.asarray(mask, bool)
        return AtomicMeasure(self.locations[mask], self.weights[mask], self.origin, self.cell_volume, merge=False)

    def transform_modifier(self, modifier, exponent):
        """Multiply each weight by modifier(location)**exponent; modifier must be positive at atoms."""
        if self.is_zero:
            return self
        m = _eval_scalar_function(modifier, self.locations)
        bad = ~(m > 0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise EvaluationError(
                f"modifier is nonpositive ({m[k]}) at atom {self.locations[k].tolist()}",
                witness=self.locations[k].tolist(),
            )
        return AtomicMeasure(self.locations, self.weights * m ** exponent, self.origin, self.cell_volume, merge=False)

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.dim != other.dim:
            raise ConfigurationError("cannot add measures of different ambient dimension")
        origin = self.origin if self.origin == other.origin else "atoms"
        cell = self.cell_volume if origin == "grid" and self.cell_volume == other.cell_volume else None
        if origin == "grid" and cell is None:
            origin = "atoms"
        return AtomicMeasure(
            np.vstack([self.locations, other.locations]),
            np.concatenate([self.weights, other.weights]),
            origin,
            cell,
        )

    def __repr__(self):
        return f"AtomicMeasure(atoms={self.size}, mass={self.mass:.6g}, origin={self.origin!r})"


def _merge_exact(locations, weights):
    index = {}
    order = []
    sums = []
    for loc, w in zip(np.ascontiguousarray(locations), weights):
        key = loc.tobytes()
        if key in index:
            sums[index[key]] += w
        else:
            index[key] = len(order)
            order.append(loc)
            sums.append(float(w))
    return np.array(order, dtype=float).reshape(len(order), -1), np.array(sums, dtype=float)


def _eval_scalar_function(fn, points):
    """Evaluate a scalar function on (N, n) points, accepting vectorized or per-point callables."""
    try:
        vals = np.asarray(fn(points), dtype=float).reshape(-1)
        if len(vals) == len(points):
            return vals
    except Exception:
        pass
    return np.array([float(fn(p)) for p in points])


class Region:
    """Decidable point-membership predicate with canonical constructors."""

    def __init__(self, predicate, description="region"):
        self._predicate = predicate
        self.description = description

    def contains(self, points):
        points = as_points(points)
        out = np.asarray(self._predicate(points), bool).reshape(-1)
        if len(out) != len(points):
            raise EvaluationError("region predicate returned a mask of the wrong length")
        return out

    @staticmethod
    def everything():
        return Region(lambda pts: np.ones(len(pts), bool), "everything")

    @staticmethod
    def nothing():
        return Region(lambda pts: np.zeros(len(pts), bool), "nothing")

    @staticmethod
    def euclidean_ball(center, radius):
        center = np.asarray(center, float)
        return Region(
            lambda pts: np.sum((pts - center) ** 2, axis=1) < radius**2,
            f"ball(center={center.tolist()}, r={radius})",
        )

    @staticmethod
    def outside_ball(center, radius):
        """Complement of the open ball: |y - center| >= radius (the far-field tail region)."""
        center = np.asarray(center, float)
        return Region(
            lambda pts: np.sum((pts - center) ** 2, axis=1) >= radius**2,
            f"outside-ball(center={center.tolist()}, R={radius})",
        )

    def __repr__(self):
        return f"Region({self.description})"


def from_atoms(atoms):
    """Build a measure from (location, weight) pairs or rows [x1..xn, w]."""
    if len(atoms) == 0:
        return AtomicMeasure(np.zeros((0, 1)), np.zeros(0))
    first = atoms[0]
    if isinstance(first, (tuple, list)) and len(first) == 2 and np.ndim(first[0]) >= 1:
        locs = [np.asarray(loc, float).reshape(-1) for loc, _ in atoms]
        ws = [w for _, w in atoms]
    else:
        rows = np.asarray(atoms, float)
        if rows.ndim != 2 or rows.shape[1] < 2:
            raise ConfigurationError("atom rows must be [coords..., weight]")
        locs, ws = rows[:, :-1], rows[:, -1]
    return AtomicMeasure(np.asarray(locs, float), np.asarray(ws, float))


class RegularGrid:
    """Axis-aligned lattice of cell centers with a common cell volume."""

    def __init__(self, centers, cell_volume, cell_size):
        self.centers = as_points(centers)
        self.cell_volume = float(cell_volume)
        self.cell_size = np.asarray(cell_size, float)
        if self.centers.size == 0:
            raise ConfigurationError("grid has no cells")

    @property
    def size(self):
        return len(self.centers)


def grid_box(lo, hi, cells):
    """Regular grid over the box [lo, hi] with `cells` cells per axis (int or per-axis list)."""
    lo = np.asarray(lo, float).reshape(-1)
    hi = np.asarray(hi, float).reshape(-1)
    n = len(lo)
    if len(hi) != n:
        raise ConfigurationError("box corners have mismatched dimensions")
    if np.any(hi <= lo):
        raise ConfigurationError("box upper corner must exceed lower corner in every axis")
    counts = np.broadcast_to(np.asarray(cells, int).reshape(-1), (n,)) if np.ndim(cells) else np.full(n, int(cells))
    if np.any(counts < 1):
        raise ConfigurationError("cell counts must be >= 1")
    steps = (hi - lo) / counts
    axes = [lo[k] + steps[k] * (np.arange(counts[k]) + 0.5) for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return RegularGrid(centers, float(np.prod(steps)), steps)


def grid_ball(center, radius, cells_per_axis):
    """Regular grid over a ball: box grid clipped to cell centers inside the ball."""
    center = np.asarray(center, float).reshape(-1)
    n = len(center)
    box = grid_box(center - radius, center + radius, cells_per_axis)
    inside = np.sum((box.centers - center) ** 2, axis=1) < radius**2
    if not np.any(inside):
        raise ConfigurationError("no grid cell centers fall inside the ball; refine the grid")
    return RegularGrid(box.centers[inside], box.cell_volume, box.cell_size)


def from_density(grid, density):
    """Midpoint quadrature of a nonnegative density: one atom per cell, weight density * cell volume."""
    vals = _eval_scalar_function(density, grid.centers)
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError("density must be finite at every cell center")
    if np.any(vals < 0):
        raise ConfigurationError("density must be nonnegative")
    return AtomicMeasure(grid.centers, vals * grid.cell_volume, origin="grid", cell_volume=grid.cell_volume)


def restrict(measure, region):
    return measure.restrict(region)


def transform_modifier(measure, modifier, exponent):
    return measure.transform_modifier(modifier, exponent)


def atom_indices_in(measure, points):
    """Index of each atom location inside a point array (exact row match), or None."""
    cloud = row_index_map(points)
    idx = []
    for loc in np.ascontiguousarray(measure.locations):
        idx.append(cloud.get(loc.tobytes()))
    return idx
