import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sublineq as sq
from sublineq.errors import ConfigurationError, EvaluationError


class TestFromAtoms:
    def test_single_atom(self):
        m = sq.from_atoms([[0.0, 0.0, 0.0, 4.0]])
        assert m.mass == 4.0
        assert m.size == 1

    def test_empty_is_zero_measure(self):
        m = sq.from_atoms([])
        assert m.is_zero
        assert m.mass == 0.0

    def test_exact_merge_is_additive(self):
        m = sq.from_atoms([[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 2.0]])
        assert m.size == 1
        assert m.mass == 3.0

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigurationError, match="negative"):
            sq.from_atoms([[0.0, -1.0]])

    def test_zero_weight_atoms_dropped(self):
        m = sq.from_atoms([[0.0, 0.0], [1.0, 2.0]])
        assert m.size == 1


class TestFromDensity:
    def test_single_cell_unit_cube(self):
        g = sq.grid_box([0, 0, 0], [1, 1, 1], 1)
        m = sq.from_density(g, lambda pts: np.ones(len(pts)))
        assert m.size == 1
        assert m.mass == pytest.approx(1.0)

    def test_constant_density_exact_mass(self):
        g = sq.grid_box([-1, -1], [1, 1], 5)
        m = sq.from_density(g, lambda pts: np.full(len(pts), 3.0))
        assert m.mass == pytest.approx(3.0 * 4.0, rel=1e-13)

    def test_radial_density_against_fine_grid_oracle(self):
        # independent oracle: the same integral on a 100^3 midpoint grid
        def dens(pts):
            return np.linalg.norm(pts, axis=1)

        fine = sq.from_density(sq.grid_box([-1] * 3, [1] * 3, 100), dens)
        oracle_mass = fine.mass
        m = sq.from_density(sq.grid_box([-1] * 3, [1] * 3, 8), dens)
        assert abs(m.mass - oracle_mass) / oracle_mass < 0.02

    def test_refinement_shrinks_the_error(self):
        # smooth Lipschitz density: doubling the resolution shrinks the midpoint
        # error by at least the refinement factor
        def dens(pts):
            return np.exp(pts[:, 0])

        exact = (np.e - 1.0 / np.e) * 2.0  # integral over [-1,1]^2 of exp(x1)
        err = []
        for cells in (6, 12):
            m = sq.from_density(sq.grid_box([-1, -1], [1, 1], cells), dens)
            err.append(abs(m.mass - exact) + 1e-30)
        assert err[1] <= err[0] / 1.8

    def test_negative_density_rejected(self):
        g = sq.grid_box([0, 0], [1, 1], 2)
        with pytest.raises(ConfigurationError, match="nonnegative"):
            sq.from_density(g, lambda pts: pts[:, 0] - 10.0)


class TestRestrict:
    def test_whole_domain_identity(self):
        m = sq.from_atoms([[0.0, 1.0], [2.0, 3.0]])
        r = m.restrict(sq.Region.everything())
        assert r.mass == m.mass and r.size == m.size

    def test_empty_region(self):
        m = sq.from_atoms([[0.0, 1.0], [2.0, 3.0]])
        assert m.restrict(sq.Region.nothing()).is_zero

    def test_partition_additivity(self, rng):
        locs = rng.uniform(-2, 2, (15, 3))
        m = sq.AtomicMeasure(locs, rng.uniform(0, 1, 15))
        ball = sq.Region.euclidean_ball([0, 0, 0], 1.0)
        complement = sq.Region(lambda pts: ~ball.contains(pts), "complement")
        assert m.restrict(ball).mass + m.restrict(complement).mass == pytest.approx(m.mass)

    def test_idempotent(self, rng):
        locs = rng.uniform(-2, 2, (10, 2))
        m = sq.AtomicMeasure(locs, rng.uniform(0, 1, 10))
        ball = sq.Region.euclidean_ball([0, 0], 1.2)
        once = m.restrict(ball)
        twice = once.restrict(ball)
        assert np.array_equal(once.weights, twice.weights)
        assert np.array_equal(once.locations, twice.locations)

    @given(st.floats(0.1, 1.0), st.floats(0.0, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_region(self, r_small, extra):
        locs = np.array([[0.0, 0.0], [0.5, 0.0], [1.5, 0.5], [-0.7, 0.2]])
        m = sq.AtomicMeasure(locs, [1.0, 2.0, 3.0, 4.0])
        small = m.restrict(sq.Region.euclidean_ball([0, 0], r_small))
        big = m.restrict(sq.Region.euclidean_ball([0, 0], r_small + extra))
        assert small.mass <= big.mass + 1e-15


class TestTransformModifier:
    def test_identity(self):
        m = sq.from_atoms([[0.0, 2.0], [1.0, 3.0]])
        t = sq.transform_modifier(m, lambda x: 1.0, 1.5)
        assert np.array_equal(t.weights, m.weights)

    def test_hand_value(self):
        m = sq.from_atoms([[0.0, 2.0]])
        t = sq.transform_modifier(m, lambda x: 3.0, 1.5)
        assert t.weights[0] == pytest.approx(2.0 * 3.0**1.5)

    def test_roundtrip(self, rng):
        locs = rng.uniform(-1, 1, (8, 2))
        m = sq.AtomicMeasure(locs, rng.uniform(0.1, 2.0, 8))
        mod = lambda x: 1.0 + x[0] ** 2
        back = sq.transform_modifier(sq.transform_modifier(m, mod, 1.7), mod, -1.7)
        assert np.allclose(back.weights, m.weights, rtol=1e-14)

    @given(st.floats(-2, 2), st.floats(-2, 2))
    @settings(max_examples=25, deadline=None)
    def test_exponent_composition(self, e1, e2):
        m = sq.from_atoms([[0.5, 2.0], [1.0, 1.0]])
        mod = lambda x: 1.5 + x[0]
        a = sq.transform_modifier(sq.transform_modifier(m, mod, e1), mod, e2)
        b = sq.transform_modifier(m, mod, e1 + e2)
        assert np.allclose(a.weights, b.weights, rtol=1e-12)

    def test_nonpositive_modifier_names_witness(self):
        m = sq.from_atoms([[0.0, 2.0], [1.0, 3.0]])
        with pytest.raises(EvaluationError) as err:
            sq.transform_modifier(m, lambda x: x[0] - 0.5, 1.0)
        assert err.value.witness is not None


class TestGrids:
    def test_ball_grid_inside(self):
        g = sq.grid_ball([0, 0, 0], 1.0, 6)
        assert np.all(np.linalg.norm(g.centers, axis=1) < 1.0)

    def test_box_validation(self):
        with pytest.raises(ConfigurationError):
            sq.grid_box([0, 0], [0, 1], 4)
