import numpy as np
import pytest

import sublineq as sq
from sublineq.errors import ConfigurationError
from sublineq.scenarios import random_matrix_instance, random_riesz_instance, scalar_instance


class TestConstants:
    def test_lower_constant_examples(self):
        p = scalar_instance(mass=4.0, q=0.5)
        cst = sq.constants(p)
        assert cst.c_lower == pytest.approx(0.25)  # (1 - 1/2)^2 with b = 1
        p.kernel.wmp_constant = 2.0
        cst2 = sq.constants(p)
        assert cst2.c_lower == pytest.approx(0.25 * 2.0 ** (-2.0))  # b^{-q/(1-q)^2}

    def test_upper_constant_examples(self):
        pts = np.array([[0.0]])
        k = sq.matrix_kernel(pts, [[1.0]])
        k.wmp_constant = 1.0
        p = sq.Problem(k, [0.5], [sq.from_atoms([[0.0, 4.0]])], points=pts)
        assert sq.constants(p).c_upper == pytest.approx(16.0)  # max(1, 4^2)
        p2 = sq.Problem(k, [0.5], [sq.from_atoms([[0.0, 0.9]])], points=pts)
        assert sq.constants(p2).c_upper == 1.0  # max(1, 0.81)

    def test_chain_inequality(self, rng):
        # c_lower <= (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)^2} <= (1-q_i)^{1/(1-q_i)} b^{-q_i/(1-q_i)}
        for k in range(10):
            p = random_matrix_instance(k, exact_b=False)
            cst = sq.constants(p)
            assert 0 < cst.c_lower <= 1 <= cst.c_upper
            for chain, low in zip(cst.per_term_chain, cst.per_term_lower):
                assert cst.c_lower <= chain + 1e-15
                assert chain <= low + 1e-15

    def test_riesz_constant_alias(self):
        p = random_riesz_instance(2, cells=3)
        cst = sq.constants(p)
        assert cst.c_riesz_lower == pytest.approx(cst.c_lower)  # b = 2^{n-2a} is analytic here

    def test_missing_b_is_configuration_error(self):
        pts = np.array([[0.0], [1.0]])
        k = sq.matrix_kernel(pts, [[1.0, 0.5], [0.5, 1.0]])
        p = sq.Problem(k, [0.5], [sq.AtomicMeasure(pts, [1.0, 1.0])], points=pts)
        with pytest.raises(ConfigurationError, match="maximum-principle"):
            sq.constants(p)


class TestSolveMinimal:
    def test_scalar_fixed_point(self):
        rep = sq.solve_minimal(scalar_instance())
        assert rep.converged
        assert rep.solution.values[0] == pytest.approx(16.0, abs=1e-9)
        assert rep.iterations <= 60

    def test_monotone_trace(self):
        rep = sq.solve_minimal(scalar_instance())
        assert all(d >= 0 for d in rep.trace)

    def test_sigma0_only_exact_after_one_iteration(self):
        pts = np.array([[0.0], [1.0]])
        k = sq.matrix_kernel(pts, [[1.0, 0.5], [0.5, 1.0]])
        k.wmp_constant = 1.0
        sigma0 = sq.AtomicMeasure(pts, [1.0, 2.0])
        p = sq.Problem(k, [0.5], [sq.from_atoms([])], sigma0=sigma0, points=pts)
        rep = sq.solve_minimal(p)
        assert rep.iterations == 1
        assert np.array_equal(rep.solution.values, p.gsig0.values)

    def test_exponent_out_of_range_cites_interval(self):
        pts = np.array([[0.0]])
        k = sq.matrix_kernel(pts, [[1.0]])
        with pytest.raises(ConfigurationError, match=r"\(0,1\)"):
            sq.Problem(k, [1.2], [sq.from_atoms([[0.0, 1.0]])], points=pts)

    def test_all_zero_data_rejected(self):
        pts = np.array([[0.0]])
        k = sq.matrix_kernel(pts, [[1.0]])
        k.wmp_constant = 1.0
        p = sq.Problem(k, [0.5], [sq.from_atoms([])], points=pts)
        with pytest.raises(ConfigurationError, match="nonzero"):
            sq.solve_minimal(p)

    def test_two_term_instance_matches_newton_oracle(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1, 1, (4, 2))
        from sublineq.geometry import distances

        V = 1.0 / (distances(pts, pts) + 0.4)
        k = sq.matrix_kernel(pts, 0.5 * (V + V.T))
        k.wmp_constant = sq.wmp_constant_exact(k)
        measures = [sq.AtomicMeasure(pts, rng.uniform(0.1, 0.6, 4)),
                    sq.AtomicMeasure(pts, rng.uniform(0.1, 0.6, 4))]
        p = sq.Problem(k, [0.7, 0.3], measures, points=pts,
                       options=sq.SolverOptions(tol=1e-12))
        rep = sq.solve_minimal(p)
        root = sq.newton_minimal_root(p)
        assert np.max(np.abs(rep.solution.values - root)) < 1e-8

    def test_exponents_sorted_with_measures_in_lockstep(self):
        pts = np.array([[0.0], [1.0]])
        k = sq.matrix_kernel(pts, [[1.0, 0.5], [0.5, 1.0]])
        k.wmp_constant = 1.0
        m1 = sq.AtomicMeasure(pts, [1.0, 0.0])
        m2 = sq.AtomicMeasure(pts, [0.0, 2.0])
        p = sq.Problem(k, [0.3, 0.8], [m1, m2], points=pts)
        assert p.exponents == [0.8, 0.3]
        assert p.measures[0].mass == 2.0  # m2 travelled with its exponent
        assert p.term_user_index == [1, 0]

    def test_points_extended_with_atom_locations(self):
        pts = np.array([[2.0, 0.0]])
        k = sq.riesz_kernel(2, 0.6)
        meas = sq.from_atoms([[0.0, 0.0, 1.0]])
        p = sq.Problem(k, [0.5], [meas], points=pts)
        assert len(p.points) == 2
        assert np.array_equal(p.points[0], [2.0, 0.0])
        assert np.array_equal(p.points[1], [0.0, 0.0])

    def test_harmonic_must_be_finite_nonnegative(self):
        pts = np.array([[0.0]])
        k = sq.matrix_kernel(pts, [[1.0]])
        with pytest.raises(ConfigurationError):
            sq.Problem(k, [0.5], [sq.from_atoms([[0.0, 1.0]])], harmonic=-1.0, points=pts)


class TestSolveFromAbove:
    def test_scalar_fixed_point(self):
        rep = sq.solve_from_above(scalar_instance())
        assert rep.converged
        assert rep.solution.values[0] == pytest.approx(16.0, abs=1e-9)

    def test_sigma0_only_exact(self):
        pts = np.array([[0.0], [1.0]])
        k = sq.matrix_kernel(pts, [[1.0, 0.5], [0.5, 1.0]])
        k.wmp_constant = 1.0
        sigma0 = sq.AtomicMeasure(pts, [1.0, 2.0])
        p = sq.Problem(k, [0.5], [sq.from_atoms([])], sigma0=sigma0, points=pts)
        rep = sq.solve_from_above(p)
        assert np.array_equal(rep.solution.values, p.gsig0.values)

    def test_agreement_with_minimal(self):
        for seed in range(5):
            p = random_riesz_instance(seed, cells=3, q_range=(0.2, 0.45))
            lo = sq.solve_minimal(p)
            hi = sq.solve_from_above(p)
            assert np.max(np.abs(lo.solution.values - hi.solution.values)) <= 2e-10


class TestMinimality:
    def test_below_any_supersolution(self):
        p = random_matrix_instance(3, exact_b=False)
        rep = sq.solve_minimal(p)
        tol = p.options.tol
        # 1.2 u is a supersolution whenever u solves the equation
        super_u = 1.2 * rep.solution.values
        assert np.max(p.apply_map(super_u) - super_u) <= tol * 10
        assert np.all(rep.solution.values <= super_u + 10 * tol)

    def test_scaling_law_single_term(self):
        p = random_riesz_instance(21, cells=3, max_m=1, q_range=(0.3, 0.5),
                                  with_sigma0=False, with_h=False)
        q = p.exponents[0]
        base = sq.solve_minimal(p).solution.values
        for lam in (0.5, 2.0):
            scaled = sq.Problem(p.kernel, [q], [p.measures[0].scaled(lam)],
                                points=p.points, options=p.options)
            u = sq.solve_minimal(scaled).solution.values
            rel = np.max(np.abs(u - lam ** (1 / (1 - q)) * base)) / np.max(u)
            assert rel <= 1e-9


class TestUniquenessGap:
    def test_identical_fields(self):
        p = scalar_instance()
        rep = sq.solve_minimal(p)
        out = sq.uniqueness_gap(p, rep.solution, rep.solution, j_max=4)
        assert out.kappa == 1.0
        assert out.both_solutions
        assert all(f == 1.0 for f in out.factors)

    def test_doubled_field_is_not_a_solution(self):
        p = scalar_instance()
        rep = sq.solve_minimal(p)
        doubled = p.field(2.0 * rep.solution.values)
        out = sq.uniqueness_gap(p, rep.solution, doubled, j_max=4)
        assert out.kappa == pytest.approx(2.0)
        assert not out.both_solutions
        assert "not both solutions" in out.message

    def test_cross_run_gap(self):
        p = random_riesz_instance(8, cells=3, q_range=(0.2, 0.45))
        lo = sq.solve_minimal(p)
        hi = sq.solve_from_above(p)
        out = sq.uniqueness_gap(p, lo.solution, hi.solution, j_max=6)
        assert out.kappa <= 1.0 + 10 * p.options.tol
        assert out.both_solutions and out.reapplied_bounds_hold

    def test_zero_field_rejected(self):
        p = scalar_instance()
        rep = sq.solve_minimal(p)
        with pytest.raises(sq.EvaluationError):
            sq.uniqueness_gap(p, rep.solution, p.field(np.zeros(1)))


class TestSchauder:
    def _disc_problem(self, q=0.3, boundary=None, tol=1e-10):
        kernel = sq.green_ball_kernel(2, [0.0, 0.0], 1.0)
        grid = sq.grid_ball([0.0, 0.0], 0.7, 5)
        meas = sq.from_density(grid, lambda p: 0.7 + 0.5 * np.exp(-np.sum(p * p, axis=1)))
        s = sq.sup_norm(sq.potential(kernel, meas, grid.centers, "cell-average"))
        meas = meas.scaled(1.0 / s)
        return sq.Problem(kernel, [q], [meas], boundary=boundary, points=grid.centers,
                          options=sq.SolverOptions(tol=tol, poisson_nodes=128))

    def test_zero_boundary_matches_minimal(self):
        p = self._disc_problem(boundary=sq.BoundaryData.zero())
        rep_s = sq.schauder_iterate(p, modulus_pairs=5)
        p2 = self._disc_problem(boundary=None)
        rep_m = sq.solve_minimal(p2)
        assert np.max(np.abs(rep_s.solution.values - rep_m.solution.values)) <= 1e-10

    def test_constant_data_no_measures(self):
        kernel = sq.green_ball_kernel(2, [0.0, 0.0], 1.0)
        pts = np.array([[0.1, 0.0], [0.0, 0.3]])
        p = sq.Problem(kernel, [0.5], [sq.from_atoms([])],
                       boundary=sq.BoundaryData.constant(0.7), points=pts)
        rep = sq.schauder_iterate(p, modulus_pairs=2)
        assert rep.iterations == 1
        assert np.allclose(rep.solution.values, 0.7)

    def test_membership_and_modulus(self):
        p = self._disc_problem(boundary=sq.BoundaryData.function(lambda xi: 1.0 + xi[0], sup=2.0))
        rep = sq.schauder_iterate(p, modulus_pairs=50, seed=1)
        assert rep.converged
        d = rep.diagnostics
        assert d["modulus_empirical"] <= d["modulus_bound"] + 1e-12
        assert np.all(rep.solution.values <= d["class_cap"] + 1e-9)


class TestSolveModified:
    def test_identity_modifier_bitwise(self):
        p = random_matrix_instance(2, exact_b=False)
        direct = sq.solve_minimal(p)
        via = sq.solve_modified(p, modifier=lambda x: 1.0)
        assert np.array_equal(direct.solution.values, via.solution.values)

    def test_constant_modifier_scalar(self):
        p = scalar_instance(tol=1e-13)
        direct = sq.solve_minimal(p)
        via = sq.solve_modified(p, modifier=lambda x: 2.0)
        assert np.max(np.abs(direct.solution.values - via.solution.values)) <= 1e-12

    def test_ball_default_modifier_roundtrip(self):
        from sublineq.scenarios import random_green_instance

        p = random_green_instance(4, cells=4, max_m=1, with_sigma0=False,
                                  boundary_kind="never")
        direct = sq.solve_minimal(p)
        via = sq.solve_modified(p, modifier="ball-center-default")
        rel = np.max(np.abs(direct.solution.values - via.solution.values))
        assert rel <= 10 * p.options.tol * max(1.0, np.max(direct.solution.values))


class TestInLoopAssertions:
    def test_monotonicity_violation_raises_with_witness(self):
        p = scalar_instance()
        p.apply_map = lambda u: 0.9 * u  # a shrinking map can never be the real one
        with pytest.raises(sq.InternalInvariantError, match="monotonicity") as err:
            sq.solve_minimal(p)
        assert err.value.witness is not None

    def test_bound_violation_raises(self):
        p = scalar_instance()
        cst = sq.constants(p)
        p.apply_map = lambda u: u + 2.0 * cst.c_upper
        with pytest.raises(sq.InternalInvariantError, match="bound"):
            sq.solve_minimal(p)

    def test_descending_rise_raises(self):
        p = scalar_instance()
        p.apply_map = lambda u: u * 1.5
        with pytest.raises(sq.InternalInvariantError):
            sq.solve_from_above(p)


class TestNonexistence:
    def test_blowup_flagged_with_diagnosis(self):
        kernel = sq.riesz_kernel(3, 1.0)
        grid = sq.grid_ball([0, 0, 0], 1000.0, 8)
        meas = sq.from_density(grid, lambda p: np.full(len(p), 10.0))
        p = sq.Problem(kernel, [0.5], [meas], points=grid.centers[:4],
                       options=sq.SolverOptions(blowup_threshold=1e6))
        rep = sq.solve_minimal(p)
        assert rep.status == "nonexistence-flagged"
        assert rep.solution is None
        assert "bounded" in rep.diagnostics["message"]

    def test_infinite_potential_flagged(self):
        kernel = sq.riesz_kernel(3, 1.0)
        meas = sq.from_atoms([[0, 0, 0, 1.0]])
        pts = np.array([[0, 0, 0.0], [0, 0, 1.0]])
        p = sq.Problem(kernel, [0.5], [meas], points=pts,
                       options=sq.SolverOptions(diagonal_policy="exact"))
        rep = sq.solve_minimal(p)
        assert rep.status == "nonexistence-flagged"
