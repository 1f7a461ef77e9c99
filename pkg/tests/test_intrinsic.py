import numpy as np
import pytest

import sublineq as sq

from conftest import make_symmetric_matrix_kernel


@pytest.fixture
def small_matrix_kernel():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    V = np.array([[2.0, 1.0, 0.5], [1.0, 3.0, 0.8], [0.5, 0.8, 1.5]])
    return sq.matrix_kernel(pts, V), pts, V


class TestKernelBall:
    def test_riesz_order_one_is_euclidean_ball(self, rng):
        k = sq.riesz_kernel(3, 1.0)
        x = np.array([0.2, -0.1, 0.4])
        r = 0.8
        region = sq.kernel_ball(k, x, r)
        pts = rng.uniform(-1, 1, (40, 3))
        inside = region.contains(pts)
        assert np.array_equal(inside, np.linalg.norm(pts - x, axis=1) < r)

    def test_small_radius_empty(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        region = sq.kernel_ball(k, pts[0], 1e-9, candidate_points=pts)
        assert not region.members.any()

    def test_nesting(self, small_matrix_kernel, rng):
        k = sq.riesz_kernel(3, 0.7)
        x = np.zeros(3)
        pts = rng.uniform(-2, 2, (30, 3))
        small = sq.kernel_ball(k, x, 0.4).contains(pts)
        big = sq.kernel_ball(k, x, 0.9).contains(pts)
        assert np.all(big[small])


class TestKappa:
    def test_single_atom_closed_form(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        sigma = sq.AtomicMeasure(pts[:1], [0.7])
        res = sq.kappa(k, sigma, None, 0.5, pts)
        assert res.kappa == pytest.approx(0.7**2 * np.max(V[0]), rel=1e-12)
        assert res.status == "converged"
        assert res.maximizer.mass == pytest.approx(1.0)

    def test_scaling_homogeneity(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        sigma = sq.AtomicMeasure(pts, [0.5, 0.8, 0.3])
        base = sq.kappa(k, sigma, None, 0.4, pts).kappa
        scaled = sq.kappa(k, sigma.scaled(3.0), None, 0.4, pts).kappa
        assert scaled == pytest.approx(3.0 ** (1 / 0.4) * base, rel=1e-7)

    def test_against_simplex_grid_oracle(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        sigma = sq.AtomicMeasure(pts, [0.5, 0.8, 0.3])
        fw = sq.kappa(k, sigma, None, 0.4, pts)
        oracle = sq.simplex_grid_kappa(k, sigma, 0.4, pts, steps=120)
        assert abs(fw.kappa - oracle) < 1e-4
        assert fw.kappa <= fw.dual_bound + 1e-9

    def test_monotone_in_region(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        sigma = sq.AtomicMeasure(pts, [0.5, 0.8, 0.3])
        small = sq.kappa(k, sigma, sq.Region.euclidean_ball([0, 0], 1.5), 0.5, pts).kappa
        big = sq.kappa(k, sigma, sq.Region.everything(), 0.5, pts).kappa
        assert small <= big + 1e-12

    def test_never_below_best_dirac(self, rng):
        for _ in range(10):
            k = make_symmetric_matrix_kernel(rng, n_points=5)
            pts = k.domain.points
            sigma = sq.AtomicMeasure(pts, rng.uniform(0.1, 1.0, 5))
            q = rng.uniform(0.2, 0.8)
            res = sq.kappa(k, sigma, None, q, pts)
            G = k.matrix(sigma.locations, pts)
            diracs = (sigma.weights @ G**q) ** (1 / q)
            assert res.kappa >= np.max(diracs) - 1e-12

    def test_defining_inequality_on_random_candidates(self, rng):
        # || G nu ||_{L^q(sigma_B)} <= (kappa + tol) ||nu|| for 100 random nu
        k = make_symmetric_matrix_kernel(rng, n_points=5)
        pts = k.domain.points
        sigma = sq.AtomicMeasure(pts, rng.uniform(0.1, 1.0, 5))
        q = 0.45
        res = sq.kappa(k, sigma, None, q, pts, tol=1e-10)
        assert res.status == "converged"
        G = k.matrix(sigma.locations, pts)
        for _ in range(100):
            w = rng.uniform(0, 1, 5)
            norm_nu = w.sum()
            lq = float(np.sum(sigma.weights * (G @ w) ** q)) ** (1 / q)
            assert lq <= (res.kappa + 1e-7) * norm_nu

    def test_empty_region_trivial(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        sigma = sq.AtomicMeasure(pts, [0.5, 0.8, 0.3])
        res = sq.kappa(k, sigma, sq.Region.nothing(), 0.5, pts)
        assert res.kappa == 0.0 and res.status == "trivial"

    def test_singular_coincident_candidates_excluded(self):
        k = sq.riesz_kernel(3, 1.0)
        sigma = sq.from_atoms([[0, 0, 0, 1.0]])
        cands = np.array([[0, 0, 0.0], [0, 0, 1.0]])
        res = sq.kappa(k, sigma, None, 0.5, cands)
        assert res.excluded_candidates == 1
        assert np.isfinite(res.kappa)


class TestIntrinsicPotential:
    def test_zero_measure(self):
        k = sq.riesz_kernel(3, 1.0)
        res = sq.intrinsic_potential(k, sq.from_atoms([]), 0.5, [0, 0, 0], [[1.0, 0, 0]])
        assert res.value == 0.0

    def test_one_atom_closed_form(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        w, q = 0.7, 0.5
        sigma = sq.AtomicMeasure(pts[:1], [w])
        x = pts[1]
        r1 = 1.0 / V[1, 0]
        rmax = 100.0
        kap = w ** (1 / q) * np.max(V[0])
        e = q / (1 - q)
        analytic = kap**e * (1 / r1 - 1 / rmax)
        res = sq.intrinsic_potential(k, sigma, q, x, pts, r_max=rmax)
        assert abs(res.value - analytic) < 1e-8
        assert res.tail_exact
        assert res.tail_value == pytest.approx(kap**e / rmax, rel=1e-9)

    def test_monotone_in_the_measure(self, small_matrix_kernel):
        k, pts, V = small_matrix_kernel
        small = sq.AtomicMeasure(pts, [0.2, 0.2, 0.2])
        big = sq.AtomicMeasure(pts, [0.4, 0.5, 0.3])
        x = pts[1]
        v1 = sq.intrinsic_potential(k, small, 0.5, x, pts).value
        v2 = sq.intrinsic_potential(k, big, 0.5, x, pts).value
        assert v1 <= v2 + 1e-10

    def test_atom_at_x_is_infinite_with_diagnosis(self):
        k = sq.riesz_kernel(3, 1.0)
        sigma = sq.from_atoms([[0, 0, 0, 1.0]])
        res = sq.intrinsic_potential(k, sigma, 0.5, [0, 0, 0], [[1.0, 0, 0]])
        assert res.value == np.inf
        assert any("infinite intrinsic potential" in n for n in res.notes)

    def test_grid_measures_finite_via_cell_average(self):
        k = sq.riesz_kernel(3, 1.0)
        grid = sq.grid_box([-0.5] * 3, [0.5] * 3, 3)
        meas = sq.from_density(grid, lambda p: np.ones(len(p)))
        res = sq.intrinsic_potential(k, meas, 0.5, grid.centers[0], grid.centers)
        assert np.isfinite(res.value) and res.value > 0


class TestMaximizerContract:
    def test_primal_dual_dirac_sandwich(self, rng):
        # attained value between the best Dirac and the certified dual bound
        for _ in range(25):
            k = make_symmetric_matrix_kernel(rng, n_points=int(rng.integers(2, 7)))
            pts = k.domain.points
            n = len(pts)
            sigma = sq.AtomicMeasure(pts, rng.uniform(0.05, 1.5, n))
            q = float(rng.uniform(0.15, 0.85))
            res = sq.kappa(k, sigma, None, q, pts, tol=1e-9)
            G = k.matrix(sigma.locations, pts)
            diracs = (sigma.weights @ G**q) ** (1 / q)
            assert res.kappa >= np.max(diracs) - 1e-12
            assert res.kappa <= res.dual_bound * (1 + 1e-7)
            # the reported maximizer attains the reported value
            gv = G @ res.weights
            attained = float(np.sum(sigma.weights * gv**q)) ** (1 / q)
            assert attained == pytest.approx(res.kappa, rel=1e-9)
            assert res.maximizer.mass == pytest.approx(1.0)


class TestProductAndIntrinsicBounds:
    def test_qm_product_bound_exact_kappa(self, rng):
        # quasi-metric product bound with exact h and kappa on point clouds
        for _ in range(10):
            k = make_symmetric_matrix_kernel(rng, n_points=5)
            pts = k.domain.points
            h = sq.qm_constant_exact(k, pts)
            sigma = sq.AtomicMeasure(pts, rng.uniform(0.1, 1.0, 5))
            nu = sq.AtomicMeasure(pts, rng.uniform(0.1, 1.0, 5))
            q = rng.uniform(0.2, 0.8)
            cert = sq.check_qm_product(k, sigma, nu, q, h, pts, candidates=pts,
                                       h_provenance="exact-enumeration",
                                       kappa_provenance="exact-candidates")
            assert cert.status == "holds", cert.worst_slack

    def test_intrinsic_lower_bound_on_solved_instances(self, rng):
        for _ in range(5):
            k = make_symmetric_matrix_kernel(rng, n_points=4)
            k.wmp_constant = sq.wmp_constant_exact(k)
            pts = k.domain.points
            sigma = sq.AtomicMeasure(pts, rng.uniform(0.2, 1.0, 4))
            q = rng.uniform(0.25, 0.7)
            problem = sq.Problem(k, [q], [sigma], points=pts)
            rep = sq.solve_minimal(problem)
            cert = sq.check_intrinsic_lower(rep.solution, k, sigma, q, k.wmp_constant,
                                            candidates=pts, b_provenance="exact-lp",
                                            kappa_provenance="exact-candidates")
            assert cert.status == "holds", cert.worst_slack
