"""
Tests for masses, configurations and triangle invariants.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from syzygy.errors import CollisionError, DegenerateError
from syzygy.triangle_core import (
    BodyState,
    MassTriple,
    center_and_project,
    center_of_mass,
    conserved,
    heron_defect,
    invariants,
    jacobi_map,
    jacobi_vectors,
    kinetic_energy,
    saari_decomposition,
    side_squares,
    signed_area,
)

RIGHT_TRIANGLE = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]])


def equilateral(side=1.0):
    return side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])


def random_state(rng, scale=1.0):
    return BodyState(x=scale * rng.normal(size=(3, 2)), v=rng.normal(size=(3, 2)))


class TestMassTriple:
    """Mass constants."""

    def test_parse(self):
        m = MassTriple.parse("1, 2,3")
        assert m.as_list() == [1.0, 2.0, 3.0]

    @pytest.mark.parametrize("text", ["1,2", "1,2,3,4", "a,b,c"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            MassTriple.parse(text)

    @pytest.mark.parametrize("masses", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, np.inf)])
    def test_positive_finite(self, masses):
        with pytest.raises(ValueError):
            MassTriple(*masses)

    def test_derived_constants(self, unequal_masses):
        m = unequal_masses
        assert m.M == 6.0
        assert m.c == pytest.approx(1.0)
        assert_allclose(m.p, [1.0, 0.5, 1.0 / 3.0])
        assert m.mu1 * m.mu2 == pytest.approx(m.c)

    def test_equal(self, equal_masses):
        assert equal_masses.is_equal()
        assert not MassTriple(1.0, 2.0, 3.0).is_equal()

    def test_permuted(self, unequal_masses):
        assert unequal_masses.permuted((2, 0, 1)).as_list() == [3.0, 1.0, 2.0]


class TestBodyState:
    def test_shape_checked(self):
        with pytest.raises(ValueError):
            BodyState(x=np.zeros((2, 2)))

    def test_arrays_are_read_only(self):
        state = BodyState(x=RIGHT_TRIANGLE)
        with pytest.raises(ValueError):
            state.x[0, 0] = 1.0

    def test_flat_order(self):
        state = BodyState(x=RIGHT_TRIANGLE, v=np.ones((3, 2)), t=2.0)
        y = state.flat()
        assert_allclose(y[:6], [0, 0, 4, 0, 0, 3])
        assert BodyState.from_flat(y, t=2.0).record() == state.record()
        assert len(state.record()) == 13


class TestInvariants:
    """Sides, area, moments and z."""

    def test_right_triangle(self, equal_masses):
        inv = invariants(equal_masses, BodyState(x=RIGHT_TRIANGLE))
        assert_allclose(inv.s, [25.0, 9.0, 16.0])
        assert inv.delta == pytest.approx(6.0)
        assert inv.I1 == pytest.approx(50.0 / 3.0)
        assert inv.I == pytest.approx(50.0 / 3.0)
        assert inv.U == pytest.approx(1 / 5 + 1 / 3 + 1 / 4)
        assert inv.z == pytest.approx(4.0 / np.sqrt(3.0) * 6.0 / (50.0 / 3.0))

    def test_equilateral_is_pole(self, equal_masses):
        inv = invariants(equal_masses, BodyState(x=equilateral(2.0)))
        assert inv.z == pytest.approx(1.0)
        assert inv.I1 == pytest.approx(4.0)
        flipped = invariants(equal_masses, BodyState(x=equilateral(2.0)[[0, 2, 1]]))
        assert flipped.z == pytest.approx(-1.0)

    def test_collinear_is_eclipse(self, unequal_masses):
        x = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        assert invariants(unequal_masses, BodyState(x=x)).z == 0.0

    def test_collision_raises(self, equal_masses):
        x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(CollisionError):
            invariants(equal_masses, BodyState(x=x))

    def test_heron_identity(self, rng):
        x = rng.normal(size=(1000, 3, 2))
        s = side_squares(x)
        defect = heron_defect(s, signed_area(x))
        assert np.max(np.abs(defect) / s.sum(-1) ** 2) < 1e-12

    def test_moment_bounds(self, unequal_masses, rng):
        m = unequal_masses
        for _ in range(50):
            inv = invariants(m, random_state(rng))
            assert 3 * m.p.min() * inv.I1 <= inv.I * (1 + 1e-12)
            assert inv.I <= 3 * m.p.max() * inv.I1 * (1 + 1e-12)
            assert -1.0 <= inv.z <= 1.0

    def test_translation_and_rotation_invariance(self, unequal_masses, rng):
        state = random_state(rng)
        a = 0.7
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        moved = BodyState(x=state.x @ rot.T + np.array([3.0, -2.0]))
        before = invariants(unequal_masses, state)
        after = invariants(unequal_masses, moved)
        assert_allclose(after.s, before.s, rtol=1e-12)
        assert after.z == pytest.approx(before.z, abs=1e-12)


class TestConserved:
    def test_at_rest(self, equal_masses):
        state = BodyState(x=RIGHT_TRIANGLE)
        cons = conserved(equal_masses, state)
        assert cons.energy == pytest.approx(-invariants(equal_masses, state).U)
        assert cons.J == 0.0
        assert_allclose(cons.P, [0.0, 0.0])

    def test_rigid_rotation(self, equal_masses):
        x = equilateral() - equilateral().mean(0)
        omega = 0.5
        v = omega * np.stack([-x[:, 1], x[:, 0]], axis=-1)
        cons = conserved(equal_masses, BodyState(x=x, v=v))
        I = float((x**2).sum())
        assert cons.J == pytest.approx(omega * I)

    def test_kinetic_energy_is_twice(self, unequal_masses):
        v = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        assert kinetic_energy(unequal_masses, BodyState(x=RIGHT_TRIANGLE, v=v)) == 1 + 2 + 6


class TestCenterAndProject:
    def test_removes_momentum_and_spin(self, unequal_masses, rng):
        state = random_state(rng)
        out = center_and_project(unequal_masses, state)
        com, vcom = center_of_mass(unequal_masses, out)
        assert_allclose(com, 0.0, atol=1e-14)
        assert_allclose(vcom, 0.0, atol=1e-14)
        assert abs(conserved(unequal_masses, out).J) < 1e-12

    def test_idempotent(self, unequal_masses, rng):
        once = center_and_project(unequal_masses, random_state(rng))
        twice = center_and_project(unequal_masses, once)
        assert_allclose(twice.x, once.x, atol=1e-14)
        assert_allclose(twice.v, once.v, atol=1e-13)

    def test_rigid_rotation_goes_to_rest(self, equal_masses):
        x = equilateral() - equilateral().mean(0)
        v = np.stack([-x[:, 1], x[:, 0]], axis=-1)
        out = center_and_project(equal_masses, BodyState(x=x, v=v))
        assert_allclose(out.v, 0.0, atol=1e-14)

    def test_triple_collision_point(self, equal_masses):
        with pytest.raises(DegenerateError):
            center_and_project(equal_masses, BodyState(x=np.ones((3, 2))))


class TestJacobi:
    def test_norm_is_moment(self, unequal_masses, rng):
        state = random_state(rng)
        pair = jacobi_map(unequal_masses, state)
        assert pair.norm_squared == pytest.approx(invariants(unequal_masses, state).I)

    def test_translation_invariant(self, unequal_masses, rng):
        state = random_state(rng)
        shifted = BodyState(x=state.x + np.array([5.0, 1.0]))
        a, b = jacobi_map(unequal_masses, state), jacobi_map(unequal_masses, shifted)
        assert a.z1 == pytest.approx(b.z1)
        assert a.z2 == pytest.approx(b.z2)

    def test_velocity_norm_is_kinetic(self, unequal_masses, rng):
        state = center_and_project(unequal_masses, random_state(rng))
        w1, w2 = jacobi_vectors(unequal_masses, state.v)
        assert abs(w1) ** 2 + abs(w2) ** 2 == pytest.approx(kinetic_energy(unequal_masses, state))


class TestSaariDecomposition:
    def test_parts_sum_to_total(self, unequal_masses, rng):
        state = random_state(rng)
        split = saari_decomposition(unequal_masses, state)
        parts = split.dilation + split.shape + split.rotation + split.translation
        assert parts == pytest.approx(split.total, rel=1e-12)

    def test_rigid_rotation_is_pure_rotation(self, equal_masses):
        x = equilateral() - equilateral().mean(0)
        v = np.stack([-x[:, 1], x[:, 0]], axis=-1)
        split = saari_decomposition(equal_masses, BodyState(x=x, v=v))
        assert split.dilation == pytest.approx(0.0, abs=1e-14)
        assert split.shape == pytest.approx(0.0, abs=1e-14)
        assert split.rotation == pytest.approx(split.total)

    def test_homothety_is_pure_dilation(self, unequal_masses):
        x = equilateral() - equilateral().mean(0)
        split = saari_decomposition(unequal_masses, BodyState(x=x, v=0.3 * x))
        assert split.shape == pytest.approx(0.0, abs=1e-14)
        assert split.rotation == pytest.approx(0.0, abs=1e-14)
