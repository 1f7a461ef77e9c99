"""Point-set utilities: arrays of points, pairwise distances, exact coincidence detection.

Points are float64 arrays of shape (N, n). Coincidence means exact coordinate
equality (the same convention measures use for atom merging), so grids and atom
lists that share coordinates are detected reliably; the fast Gram-based distance
is only a prefilter.
"""

import numpy as np

from .errors import ConfigurationError


def as_points(x, dim=None):
    """Coerce to a (N, n) float array, normalizing -0.0 to +0.0 for exact-equality keys."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ConfigurationError(f"points must be a 1-D or 2-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("point coordinates must be finite")
    arr = arr + 0.0  # folds -0.0 into +0.0
    if dim is not None and arr.shape[1] != dim:
        raise ConfigurationError(f"points have dimension {arr.shape[1]}, expected {dim}")
    return arr


def sq_distances(X, Y):
    """Squared Euclidean distance matrix (len(X), len(Y)), clamped at zero.

    The Gram form cancels catastrophically for (nearly) coincident rows (BLAS
    rounding even makes x.x differ from the matmul's x.y at x == y), so every
    suspiciously small entry is recomputed by direct differencing; coincident
    rows then come out exactly zero.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    nx = np.sum(X * X, axis=1)
    ny = np.sum(Y * Y, axis=1)
    d2 = nx[:, None] + ny[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    scale = 1.0 + np.max(nx, initial=0.0) + np.max(ny, initial=0.0)
    ii, jj = np.nonzero(d2 <= 1e-12 * scale)
    if len(ii):
        diff = X[ii] - Y[jj]
        d2[ii, jj] = np.sum(diff * diff, axis=1)
    return d2


def distances(X, Y):
    return np.sqrt(sq_distances(X, Y))


def coincidence_mask(X, Y, d2=None):
    """Boolean (len(X), len(Y)) mask of exactly-equal rows.

    sq_distances returns exact zeros for coincident rows; candidates are still
    confirmed by exact row comparison.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if d2 is None:
        d2 = sq_distances(X, Y)
    mask = np.zeros(d2.shape, dtype=bool)
    cand_i, cand_j = np.nonzero(d2 == 0.0)
    for i, j in zip(cand_i.tolist(), cand_j.tolist()):
        mask[i, j] = np.array_equal(X[i], Y[j])
    return mask


def row_index_map(points):
    """Dict from exact row bytes to row index; later duplicates keep the first index."""
    out = {}
    for i, row in enumerate(np.ascontiguousarray(points)):
        key = row.tobytes()
        if key not in out:
            out[key] = i
    return out


def match_rows(X, cloud_map):
    """Indices of rows of X inside a cloud map from row_index_map, or None where absent."""
    X = np.ascontiguousarray(np.asarray(X, float))
    return [cloud_map.get(row.tobytes()) for row in X]


def unit_ball_volume(n):
    from math import gamma, pi
    return pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def ball_radius_for_volume(volume, n):
    """Radius of the n-ball with the given volume."""
    return (volume / unit_ball_volume(n)) ** (1.0 / n)
