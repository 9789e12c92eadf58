"""Newtonian three-body dynamics.

Integration uses scipy's DOP853 (embedded 8(5,3) pair) with its 7th-order
dense output. Runs stop at ``t_end`` or when one of three terminal events
fires:
- collision: min_k sqrt(s_k / I1) below ``collision_cutoff``
- escape: I / I0 above ``escape_cutoff``
- triple_collision: I / I0 below ``triple_cutoff``

Binary collisions are not regularized.
"""

from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from syzygy.eclipse_symbolics import classify
from syzygy.errors import CollisionError, StiffnessError
from syzygy.run_log import get_run_logger
from syzygy.schemas import EclipseEvent, IntegratorConfig
from syzygy.shape_geometry import shape_angles, zdot
from syzygy.triangle_core import (
    SQRT3,
    BodyState,
    MassTriple,
    center_and_project,
    cross2,
    potential,
    side_squares,
    signed_area,
)

logger = get_run_logger("nbody")

TRAJECTORY_HEADER = (
    "t",
    "x1x", "x1y", "x2x", "x2y", "x3x", "x3y",
    "v1x", "v1y", "v2x", "v2y", "v3x", "v3y",
    "energy", "J", "z", "phi", "theta",
)  # fmt: skip

EVENTS_HEADER = ("t", "symbol", "direction", "grazing")


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator steps with telemetry, events and the dense interpolant."""

    masses: MassTriple
    t: np.ndarray
    y: np.ndarray
    energy: np.ndarray
    J: np.ndarray
    P: np.ndarray
    termination: str
    events: tuple[EclipseEvent, ...] = ()
    dense: Optional[Callable[[Any], np.ndarray]] = field(default=None, compare=False, repr=False)

    @property
    def positions(self) -> np.ndarray:
        return self.y[:, :6].reshape(-1, 3, 2)

    @property
    def velocities(self) -> np.ndarray:
        return self.y[:, 6:].reshape(-1, 3, 2)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def state(self, i: int) -> BodyState:
        return BodyState.from_flat(self.y[i], float(self.t[i]))

    @property
    def initial_state(self) -> BodyState:
        return self.state(0)

    @property
    def final_state(self) -> BodyState:
        return self.state(-1)

    def evaluate(self, times: Any) -> np.ndarray:
        """Dense-output states, shape (n, 12) for an array of times."""
        if self.dense is None:
            raise ValueError("trajectory carries no dense output")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.asarray(self.dense(times)).T.reshape(len(times), 12)

    def state_at(self, t: float) -> BodyState:
        return BodyState.from_flat(self.evaluate([t])[0], t)

    def z_at(self, times: Any) -> np.ndarray:
        y = self.evaluate(times)
        x = y[:, :6].reshape(-1, 3, 2)
        s = side_squares(x)
        return 4.0 / SQRT3 * signed_area(x) / (s.sum(-1) / 3.0)

    @property
    def z(self) -> np.ndarray:
        x = self.positions
        s = side_squares(x)
        return 4.0 / SQRT3 * signed_area(x) / (s.sum(-1) / 3.0)

    @property
    def energy_drift(self) -> float:
        """max |E - E0| / |E0|."""
        return float(np.max(np.abs(self.energy - self.energy[0])) / abs(self.energy[0]))

    @property
    def j_drift(self) -> float:
        """max |J - J0|, relative to max(|J0|, sqrt(I0 K0))."""
        x0 = self.positions[0]
        v0 = self.velocities[0]
        w = self.masses.array
        scale = np.sqrt((w @ (x0**2).sum(-1)) * (w @ (v0**2).sum(-1)))
        scale = max(abs(float(self.J[0])), float(scale), 1e-300)
        return float(np.max(np.abs(self.J - self.J[0])) / scale)

    def rows(self) -> list[tuple[float, ...]]:
        """Records for the trajectory CSV."""
        phi, theta = shape_angles(self.positions)
        z = self.z
        return [
            (
                float(self.t[i]),
                *(float(u) for u in self.y[i]),
                float(self.energy[i]),
                float(self.J[i]),
                float(z[i]),
                float(phi[i]),
                float(theta[i]),
            )
            for i in range(len(self.t))
        ]

    def event_rows(self) -> list[tuple[Any, ...]]:
        return [(e.t, e.symbol, e.direction, e.grazing) for e in self.events]


def _accelerations(masses: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = x[..., None, :, :] - x[..., :, None, :]
    r2 = np.sum(d * d, axis=-1)
    idx = np.arange(3)
    r2[..., idx, idx] = np.inf
    return np.sum(masses[None, :, None] * d / r2[..., None] ** 1.5, axis=-2)


def acceleration(m: MassTriple, positions: np.ndarray) -> np.ndarray:
    """Newtonian accelerations a_i = sum_j m_j (x_j - x_i) / r_ij^3.

    Raises:
        CollisionError: If two positions coincide
    """
    x = np.asarray(positions, dtype=float)
    if np.any(side_squares(x) == 0.0):
        raise CollisionError("two bodies coincide: force undefined")
    return _accelerations(m.array, x)


def rhs(m: MassTriple) -> Callable[[float, np.ndarray], np.ndarray]:
    masses = m.array

    def f(_t: float, y: np.ndarray) -> np.ndarray:
        x = y[:6].reshape(3, 2)
        return np.concatenate([y[6:], _accelerations(masses, x).ravel()])

    return f


def _telemetry(m: MassTriple, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = y[:, :6].reshape(-1, 3, 2)
    v = y[:, 6:].reshape(-1, 3, 2)
    w = m.array
    K = np.einsum("k,nkd,nkd->n", w, v, v)
    U = potential(m, side_squares(x))
    J = cross2(x, v) @ w
    P = np.einsum("k,nkd->nd", w, v)
    return 0.5 * K - U, J, P


def _moment(m: MassTriple, y: np.ndarray) -> float:
    return float(m.p @ side_squares(y[:6].reshape(3, 2)))


def _cutoff_events(m: MassTriple, I0: float, cfg: IntegratorConfig):
    def collision(_t, y):
        s = side_squares(y[:6].reshape(3, 2))
        return float(np.sqrt(s.min() / (s.sum() / 3.0))) - cfg.collision_cutoff

    def escape(_t, y):
        return _moment(m, y) / I0 - cfg.escape_cutoff

    def triple_collision(_t, y):
        return _moment(m, y) / I0 - cfg.triple_cutoff

    collision.terminal = True
    collision.direction = -1
    escape.terminal = True
    escape.direction = 1
    triple_collision.terminal = True
    triple_collision.direction = -1
    return [collision, escape, triple_collision], ["collision", "escape", "triple_collision"]


def integrate(
    m: MassTriple,
    state0: BodyState,
    cfg: IntegratorConfig,
    detect: bool = True,
) -> Trajectory:
    """Integrate from ``state0`` to ``state0.t + cfg.t_end`` or the first cutoff.

    Args:
        m: Masses
        state0: Collision-free initial state
        cfg: Tolerances and cutoffs
        detect: Locate eclipses along the result

    Returns:
        Trajectory: Accepted steps, telemetry and (when ``detect``) eclipse events

    Raises:
        StiffnessError: If the step size underflows before a cutoff trips
    """
    y0 = state0.flat()
    I0 = _moment(m, y0)
    events, names = _cutoff_events(m, I0, cfg)
    t_span = (state0.t, state0.t + cfg.t_end)
    options: dict[str, Any] = {}
    if cfg.max_step is not None:
        options["max_step"] = cfg.max_step

    sol = solve_ivp(
        rhs(m),
        t_span,
        y0,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        dense_output=True,
        events=events,
        **options,
    )
    if sol.status == -1:
        raise StiffnessError(
            f"integration failed at t={sol.t[-1]!r}: {sol.message}",
            {"t": float(sol.t[-1])},
        )

    termination = "time_end"
    if sol.status == 1:
        for name, hits in zip(names, sol.t_events):
            if len(hits):
                termination = name
                break

    y = sol.y.T.copy()
    energy, J, P = _telemetry(m, y)
    traj = Trajectory(
        masses=m,
        t=sol.t.copy(),
        y=y,
        energy=energy,
        J=J,
        P=P,
        termination=termination,
        dense=sol.sol,
    )
    logger.log_integration(termination, traj.t_final, len(traj.t) - 1)

    drift = max(traj.energy_drift, traj.j_drift)
    if drift > cfg.conservation_tol:
        logger.log_conservation_drift(traj.energy_drift, traj.j_drift, cfg.conservation_tol)

    if detect and len(traj.t) > 1:
        found = detect_eclipses(traj, cfg.refine_tol, cfg.grazing_tol)
        traj = replace(traj, events=tuple(found))
        logger.log_eclipses(
            count=sum(not e.grazing for e in found),
            grazing=sum(e.grazing for e in found),
            sequence="".join(str(e.symbol) for e in found if not e.grazing),
        )
    return traj


def find_zero_crossings(
    zfun: Callable[[Any], np.ndarray],
    times: np.ndarray,
    refine_tol: float = 1e-12,
    grazing_tol: float = 1e-9,
    subdivisions: int = 4,
) -> list[tuple[float, bool]]:
    """Zeros of a scalar function sampled on (subdivided) step boundaries.

    Sign changes are bracketed and refined with Brent's method; local minima
    of |z| without a sign change are polished with a bounded scalar
    minimization and reported as grazing when below ``grazing_tol``.

    Returns:
        list: (time, grazing) pairs in time order
    """
    times = np.asarray(times, dtype=float)
    fine = np.concatenate(
        [np.linspace(a, b, subdivisions, endpoint=False) for a, b in zip(times[:-1], times[1:])]
        + [times[-1:]]
    )
    values = np.asarray(zfun(fine), dtype=float)

    def scalar(t: float) -> float:
        return float(np.asarray(zfun(np.array([t])))[0])

    found: list[tuple[float, bool]] = []
    for i in range(len(fine) - 1):
        a, b = fine[i], fine[i + 1]
        za, zb = values[i], values[i + 1]
        if za == 0.0:
            if not found or found[-1][0] != a:
                found.append((float(a), False))
            continue
        if za * zb < 0.0:
            root = brentq(scalar, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            root = _polish(scalar, a, b, root, refine_tol)
            found.append((float(root), False))
    if values[-1] == 0.0 and (not found or found[-1][0] != fine[-1]):
        found.append((float(fine[-1]), False))

    mags = np.abs(values)
    for i in range(1, len(fine) - 1):
        if not (mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1]):
            continue
        if values[i - 1] * values[i] <= 0.0 or values[i] * values[i + 1] <= 0.0:
            continue
        res = minimize_scalar(
            lambda t: abs(scalar(t)),
            bounds=(fine[i - 1], fine[i + 1]),
            method="bounded",
            options={"xatol": 1e-14},
        )
        if res.fun < grazing_tol:
            found.append((float(res.x), True))

    found.sort(key=lambda item: item[0])
    return found


def _polish(f: Callable[[float], float], a: float, b: float, root: float, tol: float) -> float:
    """Bisect inside [a, b] until |f| <= tol or the bracket stops shrinking."""
    fa = f(a)
    lo, hi = a, b
    for _ in range(64):
        fr = f(root)
        if abs(fr) <= tol:
            break
        if fa * fr < 0.0:
            hi = root
        else:
            lo, fa = root, fr
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        root = mid
    return root


def detect_eclipses(
    traj: Trajectory,
    refine_tol: float = 1e-12,
    grazing_tol: float = 1e-9,
) -> list[EclipseEvent]:
    """Locate and classify every collinearity on the trajectory's span."""
    m = traj.masses
    events = []
    for t, grazing in find_zero_crossings(traj.z_at, traj.t, refine_tol, grazing_tol):
        state = traj.state_at(t)
        direction = 0 if grazing else int(np.sign(zdot(state.x, state.v)))
        events.append(
            EclipseEvent(t=t, symbol=classify(m, state), direction=direction, grazing=grazing)
        )
    return events


def lagrange_homothety_ic(m: MassTriple, size: float = 1.0, rate: float = 0.0) -> BodyState:
    """Equilateral configuration with moment ``size`` and radial velocities ``rate * x``."""
    x = _equilateral(m, 1.0)
    I = float(m.array @ (x**2).sum(-1))
    x = x * np.sqrt(size / I)
    return BodyState(x=x, v=rate * x)


def lagrange_circular_ic(m: MassTriple, side: float = 1.0) -> BodyState:
    """Equilateral relative equilibrium rotating counterclockwise with omega^2 = M / a^3."""
    x = _equilateral(m, side)
    omega = np.sqrt(m.M / side**3)
    v = omega * np.stack([-x[:, 1], x[:, 0]], axis=-1)
    return BodyState(x=x, v=v)


def _equilateral(m: MassTriple, side: float) -> np.ndarray:
    x = side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3 / 2]])
    return x - (m.array @ x) / m.M


def two_body_circular_ic(
    m: MassTriple, separation: float = 1.0, distance: float = 100.0
) -> tuple[BodyState, float]:
    """Bodies 1 and 2 on a circular Kepler orbit, body 3 parked far away at rest.

    Returns:
        tuple: (state, Kepler period of the 1-2 pair)
    """
    mu = m.m1 + m.m2
    omega = np.sqrt(mu / separation**3)
    x = np.array(
        [
            [-m.m2 / mu * separation, 0.0],
            [m.m1 / mu * separation, 0.0],
            [0.0, distance],
        ]
    )
    v = omega * np.stack([-x[:, 1], x[:, 0]], axis=-1)
    v[2] = 0.0
    return BodyState(x=x, v=v), float(2 * np.pi / omega)


def random_zero_j_ic(
    m: MassTriple, seed: int, radius: float = 1.0, kinetic_fraction: float = 0.5
) -> BodyState:
    """Random centered zero-J state with K/2 = kinetic_fraction * U (negative energy)."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(size=3))
    angle = rng.uniform(0.0, 2 * np.pi, size=3)
    x = np.stack([r * np.cos(angle), r * np.sin(angle)], axis=-1)
    v = rng.normal(size=(3, 2))
    state = center_and_project(m, BodyState(x=x, v=v))
    K = float(m.array @ (state.v**2).sum(-1))
    U = float(potential(m, side_squares(state.x)))
    scale = np.sqrt(2.0 * kinetic_fraction * U / K)
    return BodyState(x=state.x, v=state.v * scale)


def characteristic_time(m: MassTriple, state: BodyState) -> float:
    """Free-fall time scale I1^(3/4) / sqrt(M), i.e. L^(3/2) / sqrt(M) with L = sqrt(I1)."""
    I1 = float(side_squares(state.x).sum()) / 3.0
    return I1**0.75 / np.sqrt(m.M)
