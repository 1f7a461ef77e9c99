import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.PCG64(12345))


def make_qs_matrix_kernel(rng, n_points=4, a_max=3.0):
    """Random quasi-symmetric bounded matrix kernel (exact constant by construction)."""
    import sublineq as sq

    pts = rng.uniform(-1, 1, (n_points, 2))
    base = rng.uniform(0.5, 2.0, (n_points, n_points))
    sym = 0.5 * (base + base.T)
    skew = rng.uniform(1.0, a_max, (n_points, n_points))
    V = sym.copy()
    iu = np.triu_indices(n_points, 1)
    V[iu] = sym[iu] * skew[iu]
    return sq.matrix_kernel(pts, V)


def make_symmetric_matrix_kernel(rng, n_points=4, c0=0.3):
    import sublineq as sq
    from sublineq.geometry import distances

    pts = rng.uniform(-1, 1, (n_points, 2))
    d = distances(pts, pts) ** rng.uniform(0.6, 1.4) + c0
    d = 0.5 * (d + d.T)
    return sq.matrix_kernel(pts, 1.0 / d)
