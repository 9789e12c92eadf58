"""Numerical checks of the eclipse identity d/dt(f zdot) = -q z.

For zero angular momentum, with f = I lambda and K_shape = phidot^2 + cos^2(phi) thetadot^2,

    q = (1 - 1/2 cot(phi) dlog(lambda)/dphi) I lambda K_shape - 4 cot(phi) dU/dphi
      = INEQ1 * I lambda K_shape + 4 * INEQ2

where INEQ1 = sum p_k / sum p_k shat_k and INEQ2 = -cot(phi) dU/dphi. Every
cot(phi) product is evaluated from shat_k = s_k / I1, so it is smooth through
the equator and exact at the Lagrange poles.

Trajectory checks work on dense output and evaluate d/dt(f zdot) by central
differences along the vector field.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from syzygy.errors import ConfigError, DegenerateError, NonreducedError
from syzygy.nbody_dynamics import Trajectory, _accelerations, characteristic_time
from syzygy.run_log import get_run_logger
from syzygy.schemas import CorollaryReport, MonotoneReport, RecurrenceReport, ResidualReport
from syzygy.shape_geometry import (
    conformal_factor_at,
    cot_dU_dphi_shat,
    dlog_lambda_dphi_at,
    dU_dphi_at,
    ineq1_closed_form,
    ineq1_from_derivative,
    ineq2,
    kinetic_shape,
    lift_arrays,
    zdot,
)
from syzygy.triangle_core import (
    BodyState,
    MassTriple,
    cross2,
    normalized_area,
    potential,
    side_squares,
    signed_area,
)

logger = get_run_logger("theorem_lab")

DEFAULT_STEPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
CLOSED_FORM_TOL = 1e-9

SCAN_HEADER = (
    "phi",
    "theta",
    "lambda",
    "dUdphi",
    "dloglambda_dphi",
    "ineq1",
    "ineq2",
    "q_kinetic_factor",
    "q_potential_term",
)


class QTerms(NamedTuple):
    """The two summands of q and the statement-form kinetic summand (no lambda)."""

    kinetic: float
    potential: float
    statement_kinetic: float
    q: float
    scale: float


@dataclass(frozen=True)
class InequalityScan:
    masses: MassTriple
    phi: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    dU_dphi: np.ndarray
    dloglambda_dphi: np.ndarray
    ineq1: np.ndarray
    ineq1_closed: np.ndarray
    ineq2: np.ndarray
    ineq2_equator: np.ndarray

    @property
    def min_ineq1(self) -> float:
        return float(self.ineq1.min())

    @property
    def min_ineq2(self) -> float:
        return float(self.ineq2.min())

    @property
    def argmin_ineq1(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmin(self.ineq1), self.ineq1.shape)
        return float(self.phi[i]), float(self.theta[j])

    @property
    def argmin_ineq2(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmin(self.ineq2), self.ineq2.shape)
        return float(self.phi[i]), float(self.theta[j])

    @property
    def closed_form_discrepancy(self) -> float:
        return float(np.max(np.abs(self.ineq1 - self.ineq1_closed)))

    @property
    def passed(self) -> bool:
        """Both inequalities positive, the equator non-negative, INEQ1 on its closed form."""
        return (
            self.min_ineq1 > 0.0
            and self.min_ineq2 > 0.0
            and float(self.ineq2_equator.min()) >= 0.0
            and self.closed_form_discrepancy < CLOSED_FORM_TOL
        )

    def summary(self) -> dict:
        return {
            "masses": self.masses.as_list(),
            "grid": len(self.phi),
            "min_ineq1": self.min_ineq1,
            "argmin_ineq1": list(self.argmin_ineq1),
            "min_ineq2": self.min_ineq2,
            "argmin_ineq2": list(self.argmin_ineq2),
            "min_ineq2_equator": float(self.ineq2_equator.min()),
            "ineq1_closed_form_discrepancy": self.closed_form_discrepancy,
            "passed": self.passed,
        }

    def rows(self) -> list[tuple[float, ...]]:
        P, T = np.meshgrid(self.phi, self.theta, indexing="ij")
        kinetic = self.ineq1 * self.lam
        potential_term = 4.0 * self.ineq2
        cols = (
            P, T, self.lam, self.dU_dphi, self.dloglambda_dphi,
            self.ineq1, self.ineq2, kinetic, potential_term,
        )  # fmt: skip
        flat = [c.ravel() for c in cols]
        return [tuple(float(c[k]) for c in flat) for k in range(P.size)]


@dataclass(frozen=True)
class QScan:
    masses: MassTriple
    points: int
    min_kinetic: float
    min_potential: float
    min_q: float
    argmin_q: tuple[float, float, float]

    @property
    def passed(self) -> bool:
        return self.min_kinetic >= -1e-10 and self.min_potential >= -1e-10

    def summary(self) -> dict:
        return {
            "masses": self.masses.as_list(),
            "points": self.points,
            "min_kinetic_relative": self.min_kinetic,
            "min_potential_relative": self.min_potential,
            "min_q_relative": self.min_q,
            "argmin_q": list(self.argmin_q),
            "passed": self.passed,
        }


# --- array kernels -------------------------------------------------------


def _f_arrays(m: MassTriple, x: np.ndarray) -> np.ndarray:
    s = side_squares(x)
    I1 = s.sum(-1) / 3.0
    return 3.0 * m.c * I1**2 / (s @ m.p)


def _fzdot_arrays(m: MassTriple, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _f_arrays(m, x) * zdot(x, v)


def _q_arrays(m: MassTriple, x: np.ndarray, v: np.ndarray) -> dict[str, np.ndarray]:
    s = side_squares(x)
    I1 = s.sum(-1) / 3.0
    shat = s / I1[..., None]
    I = s @ m.p
    lam = 3.0 * m.c / (I / I1) ** 2
    Ks = kinetic_shape(x, v)
    ineq1 = float(m.p.sum()) / (shat @ m.p)
    cot_dU = cot_dU_dphi_shat(m, shat, I)
    kinetic = ineq1 * I * lam * Ks
    potential_term = -4.0 * cot_dU
    U = potential(m, s)
    return {
        "kinetic": kinetic,
        "potential": potential_term,
        "statement_kinetic": ineq1 * I * Ks,
        "q": kinetic + potential_term,
        "scale": I * lam * Ks + U,
    }


def _states(traj: Trajectory, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = traj.evaluate(times)
    return y[:, :6].reshape(-1, 3, 2), y[:, 6:].reshape(-1, 3, 2)


def _sample_times(traj: Trajectory, per_step: int = 4) -> np.ndarray:
    t = traj.t
    return np.concatenate(
        [np.linspace(a, b, per_step, endpoint=False) for a, b in zip(t[:-1], t[1:])]
        + [t[-1:]]
    )


def _require_zero_j(m: MassTriple, x: np.ndarray, v: np.ndarray, tol: float) -> None:
    w = m.array
    J = cross2(x, v) @ w
    I = np.einsum("k,...kd,...kd->...", w, x, x)
    K = np.einsum("k,...kd,...kd->...", w, v, v)
    scale = np.sqrt(I * K)
    worst = float(np.max(np.abs(J) - tol * np.maximum(scale, 1e-300)))
    if worst > 0.0:
        raise NonreducedError(
            "angular momentum is not zero",
            {"max_abs_J": float(np.max(np.abs(J))), "tolerance": tol},
        )


# --- operations ----------------------------------------------------------


def f_value(m: MassTriple, state: BodyState) -> float:
    """f = I lambda = 3 c(m) I1^2 / I.

    Raises:
        DegenerateError: At the triple collision point
    """
    s = side_squares(state.x)
    if float(s @ m.p) <= 0.0:
        raise DegenerateError("triple collision point: f undefined")
    return float(_f_arrays(m, state.x))


def q_terms(m: MassTriple, state: BodyState) -> QTerms:
    """Both summands of q; no angular momentum check."""
    if float(side_squares(state.x).sum()) <= 0.0:
        raise DegenerateError("triple collision point: q undefined")
    parts = _q_arrays(m, state.x, state.v)
    return QTerms(**{k: float(v) for k, v in parts.items()})


def q_value(m: MassTriple, state: BodyState, j_tol: float = 1e-10) -> float:
    """q at a zero angular momentum state.

    Raises:
        NonreducedError: If |J| exceeds j_tol sqrt(I K)
    """
    _require_zero_j(m, state.x, state.v, j_tol)
    return q_terms(m, state).q


def q_series(m: MassTriple, traj: Trajectory) -> dict[str, np.ndarray]:
    """q and its summands at every accepted step."""
    parts = _q_arrays(m, traj.positions, traj.velocities)
    parts["t"] = traj.t
    return parts


def _residual_at(
    m: MassTriple,
    traj: Trajectory,
    times: np.ndarray,
    h: float,
    q_sign: float,
    mode: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return d/dt(f zdot), q z, f sqrt(K/I) and U at the sample times."""
    x, v = _states(traj, times)
    if mode == "flow":
        a = _accelerations(m.array, x)

        def F(eps: float) -> np.ndarray:
            return _fzdot_arrays(m, x + eps * v, v + eps * a)

        D = (-F(2 * h) + 8 * F(h) - 8 * F(-h) + F(-2 * h)) / (12 * h)
    elif mode == "dense":

        def F(eps: float) -> np.ndarray:
            xs, vs = _states(traj, times + eps)
            return _fzdot_arrays(m, xs, vs)

        D = (-F(2 * h) + 8 * F(h) - 8 * F(-h) + F(-2 * h)) / (12 * h)
    else:
        raise ValueError(f"unknown difference mode {mode!r}")
    parts = _q_arrays(m, x, v)
    s = side_squares(x)
    z = normalized_area(s, signed_area(x))
    w = m.array
    K = np.einsum("k,nkd,nkd->n", w, v, v)
    I = s @ m.p
    speed = _f_arrays(m, x) * np.sqrt(K / I)
    return D, q_sign * parts["q"] * z, speed, potential(m, s)


def _max_relative(
    m: MassTriple, traj: Trajectory, h: float, q_sign: float, mode: str
) -> tuple[float, float]:
    tau = characteristic_time(m, traj.initial_state)
    times = _sample_times(traj)
    if mode == "dense":
        times = times[(times - 2 * h >= traj.t0) & (times + 2 * h <= traj.t_final)]
    D, Q, speed, U = _residual_at(m, traj, times, h, q_sign, mode)
    mag = np.maximum(np.abs(D), np.abs(Q))
    floor_abs = 1e-12 * max(float(speed.max()) / tau, float(U.max()))
    floor_rel = 1e-5 * float(mag.max())
    res = np.where(mag <= floor_abs, 0.0, np.abs(D + Q) / np.maximum(mag, floor_rel))
    k = int(np.argmax(res))
    return float(res[k]), float(times[k])


def difference_step_study(
    m: MassTriple,
    traj: Trajectory,
    steps: Optional[tuple[float, ...]] = None,
    q_sign: float = 1.0,
    mode: str = "flow",
) -> tuple[list[tuple[float, float]], float]:
    """Maximum residual for each difference step (in units of the characteristic time).

    Returns:
        tuple: ([(h, max residual), ...], h with the smallest residual)
    """
    tau = characteristic_time(m, traj.initial_state)
    study = []
    for rel in steps or DEFAULT_STEPS:
        h = rel * tau
        study.append((h, _max_relative(m, traj, h, q_sign, mode)[0]))
    best = min(study, key=lambda item: item[1])[0]
    return study, best


def ode_residual(
    m: MassTriple,
    traj: Trajectory,
    h: Optional[float] = None,
    tolerance: float = 1e-6,
    q_sign: float = 1.0,
    mode: str = "flow",
    j_tol: float = 1e-8,
) -> ResidualReport:
    """Maximum relative residual of d/dt(f zdot) + q z along a trajectory.

    Args:
        m: Masses
        traj: Zero-J collision-free trajectory with dense output
        h: Difference step; chosen by ``difference_step_study`` when omitted
        tolerance: Pass threshold
        q_sign: -1 evaluates the identity with a negated q (diagnostic)
        mode: "flow" differentiates along the vector field, "dense" along the interpolant
        j_tol: Allowed |J| relative to sqrt(I K)

    Raises:
        NonreducedError: If the trajectory does not have zero angular momentum
    """
    _require_zero_j(m, traj.positions, traj.velocities, j_tol)
    if h is None:
        _, h = difference_step_study(m, traj, q_sign=q_sign, mode=mode)
    worst, at = _max_relative(m, traj, h, q_sign, mode)
    report = ResidualReport(
        max_residual=worst, argmax_t=at, h_used=h, tolerance_pass=worst < tolerance
    )
    logger.log_check(
        "ode_residual" if q_sign > 0 else "ode_residual_negated_q",
        report.tolerance_pass,
        max_residual=worst,
        h_used=h,
    )
    return report


def scan_inequalities(m: MassTriple, grid: int = 200) -> InequalityScan:
    """Evaluate INEQ1 (derivative and closed form) and INEQ2 over 0 < phi < pi/2.

    Nodes sit at cell centers, so the grid avoids the equator, the poles and
    the binary collision points.

    Raises:
        ConfigError: If the grid has fewer than 100 nodes per axis
    """
    if grid < 100:
        raise ConfigError("inequality scans need at least 100 x 100 nodes", {"grid": grid})
    phi = (np.arange(grid) + 0.5) * (np.pi / 2) / grid
    theta = -np.pi + (np.arange(grid) + 0.5) * (2 * np.pi) / grid
    P, T = np.meshgrid(phi, theta, indexing="ij")
    scan = InequalityScan(
        masses=m,
        phi=phi,
        theta=theta,
        lam=conformal_factor_at(m, P, T),
        dU_dphi=dU_dphi_at(m, P, T, 1.0),
        dloglambda_dphi=dlog_lambda_dphi_at(m, P, T),
        ineq1=ineq1_from_derivative(m, P, T),
        ineq1_closed=ineq1_closed_form(m, P, T),
        ineq2=ineq2(m, P, T, 1.0),
        ineq2_equator=ineq2(m, np.zeros_like(theta), theta, 1.0),
    )
    logger.log_scan_completed("inequalities", grid * grid, **scan.summary())
    return scan


def scan_q(m: MassTriple, grid: int = 200, directions: int = 8) -> QScan:
    """Minimum of each q summand (relative to the local scale) over lifted unit shape velocities."""
    phi = (np.arange(grid) + 0.5) * (np.pi / 2) / grid
    theta = -np.pi + (np.arange(grid) + 0.5) * (2 * np.pi) / grid
    psi = np.arange(directions) * (2 * np.pi / directions)
    P, T, S = np.meshgrid(phi, theta, psi, indexing="ij")
    x, v = lift_arrays(m, P, T, S, 1.0)
    parts = _q_arrays(m, x, v)
    scale = parts["scale"]
    kinetic = parts["kinetic"] / scale
    potential_term = parts["potential"] / scale
    q_rel = parts["q"] / scale
    k = np.unravel_index(np.argmin(q_rel), q_rel.shape)
    result = QScan(
        masses=m,
        points=int(q_rel.size),
        min_kinetic=float(kinetic.min()),
        min_potential=float(potential_term.min()),
        min_q=float(q_rel.min()),
        argmin_q=(float(P[k]), float(T[k]), float(S[k])),
    )
    logger.log_scan_completed("q", **result.summary())
    return result


def _fine_grid(traj: Trajectory, per_step: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    times = _sample_times(traj, per_step)
    x, v = _states(traj, times)
    s = side_squares(x)
    z = normalized_area(s, signed_area(x))
    return times, z, _fzdot_arrays(m=traj.masses, x=x, v=v)


def _zdot_at(traj: Trajectory, t: float) -> float:
    x, v = _states(traj, np.array([t]))
    return float(zdot(x, v)[0])


def check_fzdot_monotone(
    m: MassTriple, traj: Trajectory, tol: float = 1e-9, j_tol: float = 1e-8
) -> MonotoneReport:
    """f zdot is non-increasing where z > 0 and non-decreasing where z < 0.

    Raises:
        NonreducedError: If the trajectory does not have zero angular momentum
    """
    _require_zero_j(m, traj.positions, traj.velocities, j_tol)
    times, z, F = _fine_grid(traj)
    sign = np.sign(z)
    scale = float(np.max(np.abs(F))) or 1.0
    intervals = 0
    violations = 0
    worst = 0.0
    start = 0
    for i in range(1, len(z) + 1):
        if i < len(z) and sign[i] == sign[start]:
            continue
        if sign[start] != 0 and i - start >= 2:
            intervals += 1
            steps = np.diff(F[start:i]) * sign[start]
            wrong = float(steps.max()) / scale
            worst = max(worst, wrong)
            if wrong > tol:
                violations += 1
        start = i
    report = MonotoneReport(
        intervals=intervals, violations=violations, worst_increase=worst, passed=violations == 0
    )
    logger.log_check("fzdot_monotone", report.passed, intervals=intervals, worst=worst)
    return report


def _arcs(traj: Trajectory) -> list[tuple[float, float]]:
    times = [e.t for e in traj.events if not e.grazing]
    return list(zip(times[:-1], times[1:]))


def _critical_times(traj: Trajectory, a: float, b: float, per_arc: int = 64) -> list[float]:
    grid = np.linspace(a, b, per_arc + 1)[1:-1]
    x, v = _states(traj, grid)
    zd = zdot(x, v)
    roots = []
    for i in range(len(grid) - 1):
        if zd[i] * zd[i + 1] < 0.0:
            roots.append(brentq(lambda t: _zdot_at(traj, t), grid[i], grid[i + 1], xtol=1e-14))
    return roots


def check_corollary(m: MassTriple, traj: Trajectory, j_tol: float = 1e-8) -> CorollaryReport:
    """Exactly one nondegenerate critical point of z between successive eclipses.

    Raises:
        NonreducedError: If the trajectory does not have zero angular momentum
    """
    _require_zero_j(m, traj.positions, traj.velocities, j_tol)
    tau = characteristic_time(m, traj.initial_state)
    counts = []
    nondegenerate = True
    for a, b in _arcs(traj):
        roots = _critical_times(traj, a, b)
        counts.append(len(roots))
        for t in roots:
            h = 1e-4 * min(tau, b - a)
            zdd = (_zdot_at(traj, t + h) - _zdot_at(traj, t - h)) / (2 * h)
            z = float(traj.z_at([t])[0])
            if not z * zdd < 0.0:
                nondegenerate = False
    passed = bool(counts) and all(c == 1 for c in counts) and nondegenerate
    report = CorollaryReport(
        arcs=len(counts), critical_points=counts, nondegenerate=nondegenerate, passed=passed
    )
    logger.log_check("corollary", passed, arcs=len(counts))
    return report


def check_recurrence(
    m: MassTriple, traj: Trajectory, min_eclipses: int = 1, j_tol: float = 1e-8
) -> RecurrenceReport:
    """Each eclipse arrives within K |z(t1)| / delta of a point t1 on the falling side.

    On each arc, t1 is halfway between the critical point and the next eclipse,
    delta = |f(t1) zdot(t1)| and K is the largest f on the arc.

    Raises:
        NonreducedError: If the trajectory does not have zero angular momentum
    """
    _require_zero_j(m, traj.positions, traj.velocities, j_tol)
    eclipses = [e.t for e in traj.events if not e.grazing]
    violations = 0
    for a, b in _arcs(traj):
        roots = _critical_times(traj, a, b)
        if not roots:
            violations += 1
            continue
        t1 = 0.5 * (roots[-1] + b)
        x, v = _states(traj, np.linspace(a, b, 65))
        K = float(_f_arrays(m, x).max())
        x1, v1 = _states(traj, np.array([t1]))
        delta = abs(float(_fzdot_arrays(m, x1, v1)[0]))
        z1 = abs(float(traj.z_at([t1])[0]))
        if delta == 0.0 or b - t1 > K * z1 / delta:
            violations += 1
    gaps = np.diff(eclipses)
    max_gap = float(gaps.max()) if len(gaps) else None
    passed = violations == 0 and len(eclipses) >= min_eclipses
    report = RecurrenceReport(
        eclipses=len(eclipses), max_gap=max_gap, bound_violations=violations, passed=passed
    )
    logger.log_check("recurrence", passed, eclipses=len(eclipses), max_gap=max_gap)
    return report
