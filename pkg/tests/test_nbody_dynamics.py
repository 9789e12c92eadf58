"""
Tests for the Newtonian right-hand side, the integrator, eclipse detection
and the special initial conditions.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from syzygy.errors import CollisionError
from syzygy.nbody_dynamics import (
    EVENTS_HEADER,
    TRAJECTORY_HEADER,
    acceleration,
    characteristic_time,
    find_zero_crossings,
    integrate,
    lagrange_circular_ic,
    lagrange_homothety_ic,
    random_zero_j_ic,
    two_body_circular_ic,
)
from syzygy.schemas import IntegratorConfig
from syzygy.triangle_core import BodyState, MassTriple, conserved, invariants, potential


def tight(t_end, **kwargs):
    return IntegratorConfig(t_end=t_end, rel_tol=1e-12, abs_tol=1e-13, **kwargs)


class TestAcceleration:
    """Newton's equations."""

    def test_equilateral_points_to_centroid(self, equal_masses):
        x = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
        a = acceleration(equal_masses, x)
        assert_allclose(np.linalg.norm(a, axis=1), np.sqrt(3.0))
        to_centroid = x.mean(0) - x
        cos = np.sum(a * to_centroid, axis=1) / (
            np.linalg.norm(a, axis=1) * np.linalg.norm(to_centroid, axis=1)
        )
        assert_allclose(cos, 1.0)

    def test_third_law(self, unequal_masses, rng):
        for _ in range(20):
            a = acceleration(unequal_masses, rng.normal(size=(3, 2)))
            total = unequal_masses.array @ a
            assert np.max(np.abs(total)) < 1e-14 * np.max(np.abs(a)) * unequal_masses.M

    def test_two_body_limit(self):
        m = MassTriple(1.0, 2.0, 1e-12)
        x = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1e6]])
        a = acceleration(m, x)
        assert_allclose(a[0], [2.0 / 4.0, 0.0], rtol=1e-9, atol=1e-15)
        assert_allclose(a[1], [-1.0 / 4.0, 0.0], rtol=1e-9, atol=1e-15)

    def test_coincident_bodies(self, equal_masses):
        with pytest.raises(CollisionError):
            acceleration(equal_masses, np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))


class TestSpecialSolutions:
    """Lagrange and Kepler initial conditions."""

    def test_circular_angular_velocity(self, equal_masses):
        state = lagrange_circular_ic(equal_masses, side=1.0)
        omega = np.sqrt(3.0)
        centripetal = -(omega**2) * state.x
        assert_allclose(acceleration(equal_masses, state.x), centripetal, atol=1e-12)
        assert conserved(equal_masses, state).J > 0

    def test_circular_is_rigid_rotation(self, unequal_masses):
        state = lagrange_circular_ic(unequal_masses, side=1.0)
        period = 2 * np.pi / np.sqrt(unequal_masses.M)
        traj = integrate(unequal_masses, state, tight(2 * period))
        I = np.array([invariants(unequal_masses, traj.state(i)).I for i in range(len(traj.t))])
        assert np.max(np.abs(I / I[0] - 1.0)) < 1e-8
        assert np.max(np.abs(traj.z - 1.0)) < 1e-6
        assert traj.events == ()
        assert traj.termination == "time_end"

    def test_homothety_keeps_shape(self, unequal_masses):
        state = lagrange_homothety_ic(unequal_masses, size=1.0, rate=0.0)
        assert conserved(unequal_masses, state).J == 0.0
        assert invariants(unequal_masses, state).I == pytest.approx(1.0)
        traj = integrate(unequal_masses, state, tight(10.0), detect=False)
        assert traj.termination == "triple_collision"
        assert np.max(np.abs(traj.z - 1.0)) < 1e-9

    def test_kepler_period(self):
        m = MassTriple(1.0, 1.0, 1e-10)
        state, period = two_body_circular_ic(m, separation=1.0, distance=100.0)
        assert period == pytest.approx(2 * np.pi / np.sqrt(2.0))
        traj = integrate(m, state, tight(5 * period), detect=False)
        assert traj.termination == "time_end"
        final = traj.final_state
        assert_allclose(final.x[:2], state.x[:2], atol=1e-6)
        assert_allclose(final.v[:2], state.v[:2], atol=1e-6)

    def test_random_zero_j(self, unequal_masses):
        state = random_zero_j_ic(unequal_masses, seed=3, kinetic_fraction=0.4)
        cons = conserved(unequal_masses, state)
        K = float(unequal_masses.array @ (state.v**2).sum(-1))
        U = invariants(unequal_masses, state).U
        assert abs(cons.J) < 1e-12
        assert_allclose(cons.P, 0.0, atol=1e-12)
        assert 0.5 * K == pytest.approx(0.4 * U)
        assert cons.energy < 0

    def test_random_zero_j_is_seeded(self, unequal_masses):
        a = random_zero_j_ic(unequal_masses, seed=11)
        b = random_zero_j_ic(unequal_masses, seed=11)
        assert a.record() == b.record()

    def test_characteristic_time_scaling(self, unequal_masses, rng):
        state = BodyState(x=rng.normal(size=(3, 2)))
        bigger = BodyState(x=4.0 * state.x)
        ratio = characteristic_time(unequal_masses, bigger) / characteristic_time(
            unequal_masses, state
        )
        assert ratio == pytest.approx(8.0)


class TestIntegrate:
    """Trajectories, telemetry and terminations."""

    def test_binary_collision_cutoff(self, equal_masses):
        state = BodyState(x=np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 10.0]]))
        traj = integrate(equal_masses, state, tight(50.0), detect=False)
        assert traj.termination == "collision"
        assert traj.t_final < 50.0

    def test_time_reversal(self, eight_orbit):
        refined, _ = eight_orbit
        m = MassTriple.equal()
        state = refined.state
        end = integrate(m, state, tight(1.5), detect=False).final_state
        back = integrate(m, BodyState(x=end.x, v=-end.v), tight(1.5), detect=False).final_state
        scale = np.max(np.abs(state.x))
        assert_allclose(back.x, state.x, atol=1e-6 * scale)
        assert_allclose(-back.v, state.v, atol=1e-6 * np.max(np.abs(state.v)))

    def test_dense_output_matches_steps(self, unequal_masses):
        traj = integrate(unequal_masses, random_zero_j_ic(unequal_masses, seed=2), tight(1.0))
        assert_allclose(traj.evaluate(traj.t), traj.y, rtol=1e-10, atol=1e-12)
        assert np.all(np.diff(traj.t) > 0)

    def test_rows_and_headers(self, unequal_masses):
        traj = integrate(unequal_masses, random_zero_j_ic(unequal_masses, seed=2), tight(0.5))
        rows = traj.rows()
        assert len(rows) == len(traj.t)
        assert all(len(r) == len(TRAJECTORY_HEADER) for r in rows)
        assert all(len(r) == len(EVENTS_HEADER) for r in traj.event_rows())
        assert rows[0][0] == traj.t0

    def test_energy_matches_potential(self, unequal_masses):
        state = random_zero_j_ic(unequal_masses, seed=4)
        traj = integrate(unequal_masses, state, tight(0.2), detect=False)
        K = float(unequal_masses.array @ (state.v**2).sum(-1))
        U = float(potential(unequal_masses, invariants(unequal_masses, state).s))
        assert traj.energy[0] == pytest.approx(0.5 * K - U)

    def test_integration_logged(self, unequal_masses, capture_run_events):
        integrate(unequal_masses, lagrange_circular_ic(unequal_masses), tight(0.1))
        types = [e["event_type"] for e in capture_run_events()]
        assert "INTEGRATION_COMPLETED" in types
        assert "ECLIPSES_DETECTED" in types


class TestEclipseDetection:
    def test_sine_roots(self):
        times = np.linspace(0.0, 10.0, 11)
        found = find_zero_crossings(np.sin, times, refine_tol=1e-13)
        roots = [t for t, grazing in found if not grazing]
        assert_allclose(roots, [0.0, np.pi, 2 * np.pi, 3 * np.pi], atol=1e-12)

    def test_grazing_zero(self):
        times = np.linspace(0.0, 3.0, 7)
        found = find_zero_crossings(lambda t: (np.asarray(t) - 1.3) ** 2, times)
        assert len(found) == 1
        t, grazing = found[0]
        assert grazing
        assert t == pytest.approx(1.3, abs=1e-5)

    def test_eight_has_six_eclipses_per_period(self, eight_orbit):
        refined, traj = eight_orbit
        transversal = [e for e in traj.events if not e.grazing]
        assert len(transversal) == 12
        for e in transversal:
            assert abs(traj.z_at([e.t])[0]) < 1e-10
        assert traj.energy_drift < 1e-8
        assert traj.j_drift < 1e-8

    def test_eight_directions_alternate(self, eight_orbit):
        _, traj = eight_orbit
        directions = [e.direction for e in traj.events if not e.grazing]
        assert all(a == -b for a, b in zip(directions, directions[1:]))

    @pytest.mark.parametrize("seed", [1, 5, 9])
    def test_finer_steps_find_the_same_eclipses(self, unequal_masses, seed):
        state = random_zero_j_ic(unequal_masses, seed=seed)
        tau = characteristic_time(unequal_masses, state)
        coarse = integrate(unequal_masses, state, tight(10.0 * tau))
        max_step = float(np.median(np.diff(coarse.t))) / 10.0
        fine = integrate(unequal_masses, state, tight(10.0 * tau, max_step=max_step))
        horizon = 0.95 * min(coarse.t_final, fine.t_final)

        def transversal(traj):
            return [e for e in traj.events if e.t < horizon and not e.grazing]

        a, b = transversal(coarse), transversal(fine)
        assert [(e.symbol, e.direction) for e in a] == [(e.symbol, e.direction) for e in b]
        assert_allclose([e.t for e in a], [e.t for e in b], atol=1e-7 * tau)

    def test_finer_steps_keep_the_eight_sequence(self, eight_orbit):
        refined, traj = eight_orbit
        max_step = float(np.median(np.diff(traj.t))) / 10.0
        cfg = tight(2.0 * refined.period, max_step=max_step)
        fine = integrate(MassTriple.equal(), refined.state, cfg)
        assert [e.symbol for e in fine.events] == [e.symbol for e in traj.events]
        assert_allclose([e.t for e in fine.events], [e.t for e in traj.events], atol=1e-7)
