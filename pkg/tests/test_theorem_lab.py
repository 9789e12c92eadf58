"""
Tests for f, q, the trajectory identity d/dt(f zdot) = -q z and the
inequality scans.
"""

import numpy as np
import pytest

from syzygy.errors import ConfigError, DegenerateError, NonreducedError
from syzygy.nbody_dynamics import (
    integrate,
    lagrange_circular_ic,
    lagrange_homothety_ic,
    random_zero_j_ic,
)
from syzygy.schemas import IntegratorConfig
from syzygy.shape_geometry import COLLISION_LONGITUDES, ShapePoint, horizontal_lift, ineq2
from syzygy.theorem_lab import (
    DEFAULT_STEPS,
    SCAN_HEADER,
    check_corollary,
    check_fzdot_monotone,
    check_recurrence,
    difference_step_study,
    f_value,
    ode_residual,
    q_series,
    q_terms,
    q_value,
    scan_inequalities,
    scan_q,
)
from syzygy.triangle_core import BodyState, MassTriple, invariants

MASS_TRIPLES = [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (3.0, 4.0, 5.0)]

EIGHT_J_TOL = 1e-7


class TestF:
    def test_equal_masses(self, equal_masses, rng):
        state = BodyState(x=rng.normal(size=(3, 2)))
        assert f_value(equal_masses, state) == pytest.approx(invariants(equal_masses, state).I)

    def test_homogeneous_degree_two(self, unequal_masses, rng):
        state = BodyState(x=rng.normal(size=(3, 2)))
        scaled = BodyState(x=3.0 * state.x)
        expected = 9.0 * f_value(unequal_masses, state)
        assert f_value(unequal_masses, scaled) == pytest.approx(expected)

    def test_equilateral_value(self, unequal_masses):
        state = lagrange_homothety_ic(unequal_masses, size=1.0)
        assert f_value(unequal_masses, state) == pytest.approx(108.0 / 121.0)

    def test_triple_collision(self, equal_masses):
        with pytest.raises(DegenerateError):
            f_value(equal_masses, BodyState(x=np.zeros((3, 2))))


class TestQ:
    """q and its two summands."""

    def test_homothety_is_zero(self, unequal_masses):
        state = lagrange_homothety_ic(unequal_masses, size=1.0, rate=-0.3)
        assert q_value(unequal_masses, state) == pytest.approx(0.0, abs=1e-12)

    def test_rotating_state_refused(self, unequal_masses):
        with pytest.raises(NonreducedError):
            q_value(unequal_masses, lagrange_circular_ic(unequal_masses))

    @pytest.mark.parametrize("masses", MASS_TRIPLES)
    def test_summands_nonnegative_on_random_states(self, masses):
        m = MassTriple(*masses)
        for seed in range(200):
            terms = q_terms(m, random_zero_j_ic(m, seed=seed))
            assert terms.kinetic >= -1e-10 * terms.scale
            assert terms.potential >= -1e-10 * terms.scale
            assert terms.q == pytest.approx(terms.kinetic + terms.potential)

    def test_collinear_state_is_finite(self, unequal_masses):
        state = horizontal_lift(unequal_masses, ShapePoint(I=1.0, phi=0.0, theta=0.5), 0.3)
        q = q_value(unequal_masses, state)
        assert np.isfinite(q)
        assert q >= 0.0

    def test_statement_form_differs_by_lambda(self, unequal_masses):
        state = horizontal_lift(unequal_masses, ShapePoint(I=2.0, phi=0.4, theta=0.5), 1.0)
        terms = q_terms(unequal_masses, state)
        f = f_value(unequal_masses, state)
        lam = f / 2.0
        assert terms.kinetic == pytest.approx(lam * terms.statement_kinetic)

    def test_even_under_reflection(self, unequal_masses):
        state = horizontal_lift(unequal_masses, ShapePoint(I=1.0, phi=0.6, theta=-1.0), 2.0)
        flip = np.array([1.0, -1.0])
        mirrored = BodyState(x=state.x * flip, v=state.v * flip)
        assert invariants(unequal_masses, mirrored).z == pytest.approx(
            -invariants(unequal_masses, state).z
        )
        assert q_value(unequal_masses, mirrored) == pytest.approx(q_value(unequal_masses, state))


class TestInequalityScan:
    def test_grid_too_small(self, unequal_masses):
        with pytest.raises(ConfigError):
            scan_inequalities(unequal_masses, grid=50)

    def test_equal_masses_ineq1_is_one(self, equal_masses):
        scan = scan_inequalities(equal_masses, grid=100)
        assert np.max(np.abs(scan.ineq1 - 1.0)) < 1e-12
        assert np.max(np.abs(scan.lam - 1.0)) < 1e-12

    @pytest.mark.parametrize("masses", MASS_TRIPLES)
    def test_inequalities_hold(self, masses):
        scan = scan_inequalities(MassTriple(*masses), grid=120)
        assert scan.min_ineq1 > 0.0
        assert scan.min_ineq2 >= -1e-12
        assert float(scan.ineq2_equator.min()) >= -1e-12
        assert scan.closed_form_discrepancy < 1e-9

    def test_ineq1_tends_to_one_at_poles(self, unequal_masses):
        scan = scan_inequalities(unequal_masses, grid=400)
        assert np.max(np.abs(scan.ineq1[-1] - 1.0)) < 1e-2

    def test_rows_and_summary(self, unequal_masses):
        scan = scan_inequalities(unequal_masses, grid=100)
        rows = scan.rows()
        assert len(rows) == 100 * 100
        assert all(len(r) == len(SCAN_HEADER) for r in rows[:10])
        summary = scan.summary()
        assert summary["grid"] == 100
        assert summary["min_ineq1"] == scan.min_ineq1

    @pytest.mark.parametrize("masses", MASS_TRIPLES)
    def test_q_scan(self, masses):
        result = scan_q(MassTriple(*masses), grid=24, directions=6)
        assert result.points == 24 * 24 * 6
        assert result.passed
        assert result.summary()["passed"] is True

    def test_q_scan_logs_completion(self, capture_run_events):
        result = scan_q(MassTriple(1.0, 2.0, 3.0), grid=16)
        events = [e for e in capture_run_events() if e["event_type"] == "SCAN_COMPLETED"]
        assert events[-1]["details"]["scan"] == "q"
        assert events[-1]["details"]["points"] == result.points == 16 * 16 * 8

    @pytest.mark.parametrize("masses", MASS_TRIPLES)
    def test_ineq2_near_collision_points(self, masses):
        m = MassTriple(*masses)
        for theta_k in COLLISION_LONGITUDES:
            along_equator = [float(ineq2(m, 0.0, theta_k + eps)) for eps in (1e-1, 1e-2, 1e-3)]
            along_meridian = [float(ineq2(m, eps, theta_k)) for eps in (1e-1, 1e-2, 1e-3)]
            for values in (along_equator, along_meridian):
                assert min(values) > 0.0
                assert values[-1] > values[0]
            with pytest.raises(DegenerateError):
                ineq2(m, 0.0, theta_k)


class TestOdeResidual:
    """The trajectory identity on the figure eight and the Lagrange drop."""

    def test_eight_identity(self, eight_orbit):
        _, traj = eight_orbit
        m = MassTriple.equal()
        report = ode_residual(m, traj, j_tol=EIGHT_J_TOL)
        assert report.tolerance_pass
        assert report.max_residual < 1e-6
        assert traj.t0 <= report.argmax_t <= traj.t_final

    def test_negated_q_fails(self, eight_orbit):
        _, traj = eight_orbit
        report = ode_residual(MassTriple.equal(), traj, q_sign=-1.0, j_tol=EIGHT_J_TOL)
        assert not report.tolerance_pass
        assert report.max_residual > 0.1

    def test_dense_mode_agrees(self, eight_orbit):
        _, traj = eight_orbit
        m = MassTriple.equal()
        report = ode_residual(m, traj, mode="dense", tolerance=1e-4, j_tol=EIGHT_J_TOL)
        assert report.tolerance_pass

    def test_unknown_mode(self, eight_orbit):
        _, traj = eight_orbit
        with pytest.raises(ValueError):
            ode_residual(MassTriple.equal(), traj, h=1e-3, mode="spline", j_tol=EIGHT_J_TOL)

    def test_step_study(self, eight_orbit):
        _, traj = eight_orbit
        study, best = difference_step_study(MassTriple.equal(), traj)
        assert len(study) == len(DEFAULT_STEPS)
        assert best in [h for h, _ in study]
        assert min(r for _, r in study) == dict(study)[best]

    def test_homothety_below_floor(self, unequal_masses):
        state = lagrange_homothety_ic(unequal_masses, size=1.0)
        traj = integrate(unequal_masses, state, IntegratorConfig(t_end=0.2), detect=False)
        assert ode_residual(unequal_masses, traj).tolerance_pass

    def test_rotating_trajectory_refused(self, unequal_masses):
        traj = integrate(
            unequal_masses,
            lagrange_circular_ic(unequal_masses),
            IntegratorConfig(t_end=0.5),
            detect=False,
        )
        with pytest.raises(NonreducedError):
            ode_residual(unequal_masses, traj)
        with pytest.raises(NonreducedError):
            check_corollary(unequal_masses, traj)

    def test_q_series(self, eight_orbit):
        _, traj = eight_orbit
        series = q_series(MassTriple.equal(), traj)
        assert len(series["q"]) == len(traj.t)
        assert np.all(series["kinetic"] >= -1e-10 * series["scale"])
        assert np.all(series["potential"] >= -1e-10 * series["scale"])


class TestEclipseChecks:
    """Monotonicity, the single critical point and recurrence along the eight."""

    def test_monotone(self, eight_orbit):
        _, traj = eight_orbit
        report = check_fzdot_monotone(MassTriple.equal(), traj, j_tol=EIGHT_J_TOL)
        assert report.passed
        assert report.intervals >= 11

    def test_corollary(self, eight_orbit):
        _, traj = eight_orbit
        report = check_corollary(MassTriple.equal(), traj, j_tol=EIGHT_J_TOL)
        assert report.passed
        assert report.arcs == 11
        assert report.critical_points == [1] * 11
        assert report.nondegenerate

    def test_recurrence(self, eight_orbit):
        refined, traj = eight_orbit
        report = check_recurrence(MassTriple.equal(), traj, j_tol=EIGHT_J_TOL)
        assert report.passed
        assert report.eclipses == 12
        assert report.max_gap == pytest.approx(refined.period / 6.0, rel=1e-3)

    def test_checks_are_logged(self, eight_orbit, capture_run_events):
        _, traj = eight_orbit
        check_corollary(MassTriple.equal(), traj, j_tol=EIGHT_J_TOL)
        (event,) = [e for e in capture_run_events() if e["event_type"] == "CHECK_PASSED"]
        assert event["details"]["check"] == "corollary"
