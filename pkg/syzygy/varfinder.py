"""Periodic loops by action minimization.

A loop is a truncated Fourier series per body with period T. The symmetry tag
fixes which coefficients are free:

- ``eight``: choreography (body k runs body 1's curve shifted by (k-1)T/3) with
  x sine-only in odd harmonics and y sine-only in even harmonics,
  multiples of 3 excluded
- ``choreography``: all harmonics not divisible by 3, sine and cosine
- ``free``: every body independent, constant term included

Constraints live in the parameterization: a tag maps a short parameter vector
linearly onto the full coefficient array, so descent never leaves the class.
"""

import json
from collections.abc import Callable
from pathlib import Path
from typing import Literal, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.optimize import minimize as scipy_minimize

from syzygy.errors import (
    CollisionApproachError,
    CollisionError,
    ConfigError,
    NonperiodicError,
    NonreducedError,
)
from syzygy.nbody_dynamics import _accelerations, integrate
from syzygy.run_log import get_run_logger
from syzygy.schemas import ActionReport, IntegratorConfig, error_detail
from syzygy.triangle_core import BodyState, MassTriple, center_and_project, cross2, side_squares

logger = get_run_logger("varfinder")

LoopTag = Literal["eight", "choreography", "free"]

DEFAULT_HARMONICS = 48
TWO_PI = 2.0 * np.pi


class LoopPath(BaseModel):
    """A T-periodic planar loop for each of the three bodies.

    ``coefficients[k][n]`` holds ``[[a_x, a_y], [b_x, b_y]]`` so that body k sits at
    ``sum_n a cos(n w t) + b sin(n w t)`` with ``w = 2 pi / T``.
    """

    model_config = ConfigDict(extra="forbid")

    masses: list[float] = Field(..., description="The three masses")
    period: float = Field(TWO_PI, gt=0, description="Loop period T")
    tag: LoopTag = Field("eight", description="Symmetry class of the parameterization")
    harmonics: int = Field(DEFAULT_HARMONICS, ge=1, description="Highest harmonic N")
    coefficients: list[list[list[list[float]]]] = Field(
        ..., description="Per-body Fourier coefficients, shape (3, N + 1, 2, 2)"
    )

    @model_validator(mode="after")
    def check_shape(self) -> "LoopPath":
        if len(self.masses) != 3 or any(not (m > 0) for m in self.masses):
            raise ValueError("three strictly positive masses are required")
        shape = np.asarray(self.coefficients, dtype=float).shape
        if shape != (3, self.harmonics + 1, 2, 2):
            raise ValueError(f"coefficients must have shape (3, N + 1, 2, 2), got {shape}")
        return self

    @classmethod
    def load(cls, path: Path | str) -> "LoopPath":
        """Read a loop file.

        Raises:
            ConfigError: If the file is missing, not JSON, or not a valid loop
        """
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read loop file {path}: {exc}") from exc
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            raise ConfigError(
                "invalid loop file", {"errors": [error_detail(e) for e in exc.errors()]}
            ) from exc

    @property
    def mass_triple(self) -> MassTriple:
        return MassTriple(*self.masses)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    def with_array(self, coefficients: np.ndarray) -> "LoopPath":
        return self.model_copy(update={"coefficients": np.asarray(coefficients).tolist()})

    def with_harmonics(self, harmonics: int) -> "LoopPath":
        """The same curve on ``harmonics`` harmonics, zero-padded or truncated."""
        coeffs = np.zeros((3, harmonics + 1, 2, 2))
        keep = min(harmonics, self.harmonics) + 1
        coeffs[:, :keep] = self.array[:, :keep]
        return self.model_copy(update={"harmonics": harmonics, "coefficients": coeffs.tolist()})

    def parameters(self) -> np.ndarray:
        """Least-squares parameters of the tag class closest to these coefficients."""
        G = parameter_map(self.tag, self.harmonics)
        return np.linalg.lstsq(G, self.array.ravel(), rcond=None)[0]

    @classmethod
    def from_parameters(
        cls,
        m: MassTriple,
        params: np.ndarray,
        tag: LoopTag = "eight",
        harmonics: int = DEFAULT_HARMONICS,
        period: float = TWO_PI,
    ) -> "LoopPath":
        G = parameter_map(tag, harmonics)
        coeffs = (G @ np.asarray(params, dtype=float)).reshape(3, harmonics + 1, 2, 2)
        return cls(
            masses=m.as_list(),
            period=period,
            tag=tag,
            harmonics=harmonics,
            coefficients=coeffs.tolist(),
        )

    def positions(self, times: np.ndarray) -> np.ndarray:
        """Positions at ``times``, shape (n, 3, 2)."""
        return _evaluate(self.array, self.omega, np.atleast_1d(times), order=0)

    def velocities(self, times: np.ndarray) -> np.ndarray:
        return _evaluate(self.array, self.omega, np.atleast_1d(times), order=1)

    def accelerations(self, times: np.ndarray) -> np.ndarray:
        return _evaluate(self.array, self.omega, np.atleast_1d(times), order=2)

    def state_at(self, t: float) -> BodyState:
        return BodyState(x=self.positions(np.array([t]))[0], v=self.velocities(np.array([t]))[0])


class RefinedOrbit(NamedTuple):
    """Initial conditions extracted from a loop and their one-period return mismatch."""

    state: BodyState
    period: float
    mismatch: float


# --- parameterization ----------------------------------------------------


def _free_harmonics(tag: LoopTag, harmonics: int) -> list[tuple[int, int, int]]:
    """(n, trig, axis) entries of body 1 that carry a parameter; trig 0 = cos, 1 = sin."""
    entries = []
    for n in range(1, harmonics + 1):
        if n % 3 == 0:
            continue
        if tag == "eight":
            entries.append((n, 1, 0 if n % 2 == 1 else 1))
        else:
            entries.extend((n, trig, axis) for trig in (0, 1) for axis in (0, 1))
    return entries


def parameter_map(tag: LoopTag, harmonics: int) -> np.ndarray:
    """Linear map from tag parameters to flattened (3, N + 1, 2, 2) coefficients."""
    size = 3 * (harmonics + 1) * 4

    def flat(k: int, n: int, trig: int, axis: int) -> int:
        return ((k * (harmonics + 1) + n) * 2 + trig) * 2 + axis

    if tag == "free":
        return np.eye(size)

    entries = _free_harmonics(tag, harmonics)
    G = np.zeros((size, len(entries)))
    for col, (n, trig, axis) in enumerate(entries):
        for k in range(3):
            shift = n * k * TWO_PI / 3.0
            c, s = np.cos(shift), np.sin(shift)
            if trig == 0:
                # a cos(n(t + s)) = a cos(s) cos(nt) - a sin(s) sin(nt)
                G[flat(k, n, 0, axis), col] = c
                G[flat(k, n, 1, axis), col] = -s
            else:
                # b sin(n(t + s)) = b sin(s) cos(nt) + b cos(s) sin(nt)
                G[flat(k, n, 0, axis), col] = s
                G[flat(k, n, 1, axis), col] = c
    return G


def _trig_tables(harmonics: int, omega: float, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    phase = np.outer(times, omega * np.arange(harmonics + 1))
    return np.cos(phase), np.sin(phase)


def _evaluate(coeffs: np.ndarray, omega: float, times: np.ndarray, order: int) -> np.ndarray:
    N = coeffs.shape[1] - 1
    C, S = _trig_tables(N, omega, times)
    a, b = coeffs[:, :, 0, :], coeffs[:, :, 1, :]
    rate = omega * np.arange(N + 1)
    if order == 0:
        return np.einsum("jn,knd->jkd", C, a) + np.einsum("jn,knd->jkd", S, b)
    if order == 1:
        return np.einsum("jn,knd->jkd", -rate * S, a) + np.einsum("jn,knd->jkd", rate * C, b)
    if order == 2:
        r2 = rate**2
        return -(np.einsum("jn,knd->jkd", r2 * C, a) + np.einsum("jn,knd->jkd", r2 * S, b))
    raise ValueError(f"unsupported derivative order {order}")


def quadrature_nodes(loop: LoopPath) -> np.ndarray:
    """Uniform nodes on [0, T); 6N of them, at least 64."""
    count = max(6 * loop.harmonics, 64)
    return np.arange(count) * (loop.period / count)


def min_distance(loop: LoopPath, times: Optional[np.ndarray] = None) -> float:
    """Smallest pairwise distance over ``times`` (default: quadrature nodes)."""
    t = quadrature_nodes(loop) if times is None else times
    return float(np.sqrt(side_squares(loop.positions(t)).min()))


# --- action --------------------------------------------------------------


def _action_and_full_gradient(m: MassTriple, loop: LoopPath) -> tuple[float, np.ndarray]:
    t = quadrature_nodes(loop)
    h = loop.period / len(t)
    coeffs = loop.array
    N = loop.harmonics
    C, S = _trig_tables(N, loop.omega, t)
    rate = loop.omega * np.arange(N + 1)
    a, b = coeffs[:, :, 0, :], coeffs[:, :, 1, :]
    X = np.einsum("jn,knd->jkd", C, a) + np.einsum("jn,knd->jkd", S, b)
    V = np.einsum("jn,knd->jkd", -rate * S, a) + np.einsum("jn,knd->jkd", rate * C, b)

    s = side_squares(X)
    scale = s.sum(-1).max() / 3.0
    if not np.all(s > 1e-24 * max(scale, 1e-300)):
        j = int(np.argmin(s.min(-1)))
        raise CollisionError(
            "loop passes through a collision at a quadrature node", {"t": float(t[j])}
        )

    w = m.array
    kinetic = 0.5 * np.einsum("k,jkd,jkd->", w, V, V)
    potential = float((m.pair_products / np.sqrt(s)).sum())
    A = h * (kinetic + potential)

    gX = h * w[None, :, None] * _accelerations(w, X)
    gV = h * w[None, :, None] * V
    grad = np.empty_like(coeffs)
    grad[:, :, 0, :] = np.einsum("jn,jkd->knd", C, gX) + np.einsum("jn,jkd->knd", -rate * S, gV)
    grad[:, :, 1, :] = np.einsum("jn,jkd->knd", S, gX) + np.einsum("jn,jkd->knd", rate * C, gV)
    return float(A), grad


def action(m: MassTriple, loop: LoopPath) -> float:
    """A = integral over one period of K/2 + U.

    Raises:
        CollisionError: If two bodies meet at a quadrature node
    """
    return _action_and_full_gradient(m, loop)[0]


def action_gradient(m: MassTriple, loop: LoopPath) -> np.ndarray:
    """Gradient of the action with respect to the tag parameters."""
    _, grad = _action_and_full_gradient(m, loop)
    return parameter_map(loop.tag, loop.harmonics).T @ grad.ravel()


def equation_residual(m: MassTriple, loop: LoopPath, oversample: int = 4) -> float:
    """max |xddot - a(x)| / max |a(x)| on a grid finer than the quadrature."""
    count = oversample * len(quadrature_nodes(loop))
    t = np.arange(count) * (loop.period / count)
    X = loop.positions(t)
    newton = _accelerations(m.array, X)
    return float(np.abs(loop.accelerations(t) - newton).max() / np.abs(newton).max())


def angular_momentum(m: MassTriple, loop: LoopPath) -> float:
    """max |J| over the quadrature nodes, relative to sqrt(I K)."""
    t = quadrature_nodes(loop)
    X, V = loop.positions(t), loop.velocities(t)
    w = m.array
    J = cross2(X, V) @ w
    scale = np.sqrt(np.einsum("k,jkd,jkd->j", w, X, X) * np.einsum("k,jkd,jkd->j", w, V, V))
    return float(np.max(np.abs(J) / np.maximum(scale, 1e-300)))


# --- seeds ---------------------------------------------------------------


def eight_seed(
    m: Optional[MassTriple] = None, harmonics: int = DEFAULT_HARMONICS, period: float = TWO_PI
) -> LoopPath:
    """Two-lobe seed x = sin t, y = 0.3 sin 2t under the eight constraints."""
    m = m or MassTriple.equal()
    entries = _free_harmonics("eight", harmonics)
    params = np.zeros(len(entries))
    params[entries.index((1, 1, 0))] = 1.0
    params[entries.index((2, 1, 1))] = 0.3
    return LoopPath.from_parameters(m, params, "eight", harmonics, period)


def lagrange_circular_loop(
    m: MassTriple, period: float = TWO_PI, harmonics: int = 1
) -> LoopPath:
    """The rotating equilateral relative equilibrium as a loop.

    Equal masses get the choreography tag; other masses are stored with the
    free tag since their circles differ.
    """
    omega = TWO_PI / period
    side = (m.M / omega**2) ** (1.0 / 3.0)
    x = side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2]])
    x = x - (m.array @ x) / m.M
    coeffs = np.zeros((3, harmonics + 1, 2, 2))
    coeffs[:, 1, 0, :] = x
    coeffs[:, 1, 1, :] = np.stack([-x[:, 1], x[:, 0]], axis=-1)
    tag: LoopTag = "choreography" if m.is_equal() else "free"
    return LoopPath(
        masses=m.as_list(),
        period=period,
        tag=tag,
        harmonics=harmonics,
        coefficients=coeffs.tolist(),
    )


# --- descent -------------------------------------------------------------


def _objective(
    m: MassTriple, template: LoopPath
) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    G = parameter_map(template.tag, template.harmonics)
    shape = (3, template.harmonics + 1, 2, 2)

    def fun(params: np.ndarray) -> tuple[float, np.ndarray]:
        loop = template.with_array((G @ params).reshape(shape))
        try:
            A, grad = _action_and_full_gradient(m, loop)
        except CollisionError:
            return np.inf, np.zeros_like(params)
        return A, G.T @ grad.ravel()

    return fun


def _newton_polish(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    params: np.ndarray,
    steps: int = 3,
    h: float = 1e-6,
) -> np.ndarray:
    """A few Newton steps on a finite-difference Hessian of the analytic gradient."""
    best = params
    best_norm = float(np.linalg.norm(fun(params)[1]))
    for _ in range(steps):
        g = fun(best)[1]
        n = len(best)
        H = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            H[:, i] = (fun(best + e)[1] - fun(best - e)[1]) / (2 * h)
        H = 0.5 * (H + H.T)
        trial = best - np.linalg.lstsq(H, g, rcond=1e-12)[0]
        trial_norm = float(np.linalg.norm(fun(trial)[1]))
        if not trial_norm < best_norm:
            break
        best, best_norm = trial, trial_norm
    return best


def minimize(
    m: MassTriple,
    initial: LoopPath,
    tol: float = 1e-8,
    max_iter: int = 2000,
    collision_fraction: float = 0.1,
    polish: bool = True,
) -> tuple[LoopPath, ActionReport]:
    """Quasi-Newton descent of the action within the loop's symmetry class.

    Args:
        m: Masses
        initial: Collision-free starting loop; its tag fixes the constraints
        tol: Target gradient norm
        max_iter: BFGS iteration cap
        collision_fraction: Abort when the minimum pairwise distance drops below
            this fraction of its initial value
        polish: Finish with Newton steps on a finite-difference Hessian

    Returns:
        tuple: (minimizing loop, ActionReport)

    Raises:
        CollisionApproachError: If the descent heads into a collision
    """
    fun = _objective(m, initial)
    p0 = initial.parameters()
    start = initial.with_array(
        (parameter_map(initial.tag, initial.harmonics) @ p0).reshape(initial.array.shape)
    )
    d0 = min_distance(start)
    if d0 <= 0.0:
        raise CollisionError("initial loop is not collision-free")
    cutoff = collision_fraction * d0
    logger.log_minimizer_started(initial.tag, initial.harmonics, len(p0))

    def guard(params: np.ndarray) -> None:
        d = min_distance(
            LoopPath.from_parameters(m, params, initial.tag, initial.harmonics, initial.period)
        )
        if d < cutoff:
            raise CollisionApproachError(
                "descent approached a collision",
                {"min_distance": d, "cutoff": cutoff},
            )

    result = scipy_minimize(
        fun,
        p0,
        jac=True,
        method="BFGS",
        callback=guard,
        options={"gtol": tol, "maxiter": max_iter},
    )
    params = result.x
    if polish:
        params = _newton_polish(fun, params)
        guard(params)

    loop = LoopPath.from_parameters(m, params, initial.tag, initial.harmonics, initial.period)
    A, g = fun(params)
    gnorm = float(np.linalg.norm(g))
    report = ActionReport(
        action=float(A),
        gradient_norm=gnorm,
        min_distance=min_distance(loop),
        equation_residual=equation_residual(m, loop),
        iterations=int(result.nit),
        converged=gnorm < tol,
    )
    logger.log_minimizer_finished(report.converged, report.action, gnorm, report.iterations)
    return loop, report


def find_eight(
    m: Optional[MassTriple] = None,
    harmonics: int = DEFAULT_HARMONICS,
    period: float = TWO_PI,
    tol: float = 1e-8,
    residual_tol: float = 1e-5,
    max_harmonics: Optional[int] = None,
) -> tuple[LoopPath, ActionReport]:
    """Minimize the action from the built-in eight seed.

    When the minimizer's loop misses ``residual_tol`` or does not close under
    ``refine_to_orbit``, the harmonic count doubles and the descent restarts from
    the previous optimum, up to ``max_harmonics`` (default four times ``harmonics``).
    """
    m = m or MassTriple.equal()
    ceiling = max_harmonics or 4 * harmonics
    loop = eight_seed(m, harmonics, period)
    while True:
        loop, report = minimize(m, loop, tol=tol)
        if _closes(m, loop, report, residual_tol) or 2 * loop.harmonics > ceiling:
            return loop, report
        logger.log_harmonics_doubled(loop.harmonics, report.equation_residual)
        loop = loop.with_harmonics(2 * loop.harmonics)


def _closes(m: MassTriple, loop: LoopPath, report: ActionReport, residual_tol: float) -> bool:
    if report.equation_residual >= residual_tol:
        return False
    try:
        refine_to_orbit(m, loop, phase=-loop.period / 12.0)
    except (NonperiodicError, NonreducedError):
        return False
    return True


# --- orbit refinement ----------------------------------------------------


def refine_to_orbit(
    m: MassTriple,
    loop: LoopPath,
    phase: float = 0.0,
    threshold: float = 1e-5,
    j_tol: float = 1e-6,
    cfg: Optional[IntegratorConfig] = None,
) -> RefinedOrbit:
    """Initial conditions at ``t = phase`` integrated over one period.

    The mismatch is |y(T) - y(0)| / |y(0)| on the flat 12-vector after
    ``center_and_project``.

    Raises:
        NonreducedError: If the loop's state at ``phase`` has |J| above j_tol sqrt(I K)
        NonperiodicError: If the return mismatch exceeds ``threshold``
    """
    raw = loop.state_at(phase)
    w = m.array
    J = float(w @ cross2(raw.x, raw.v))
    scale = float(np.sqrt((w @ (raw.x**2).sum(-1)) * (w @ (raw.v**2).sum(-1))))
    if abs(J) > j_tol * max(scale, 1e-300):
        raise NonreducedError(
            "loop carries angular momentum", {"J": J, "relative": abs(J) / max(scale, 1e-300)}
        )
    state = center_and_project(m, raw)
    base = cfg or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-13)
    run_cfg = base.model_copy(update={"t_end": loop.period})
    traj = integrate(m, state, run_cfg, detect=False)
    y0 = state.flat()
    mismatch = float(np.linalg.norm(traj.y[-1] - y0) / np.linalg.norm(y0))
    if traj.termination != "time_end" or mismatch > threshold:
        raise NonperiodicError(
            "integrated loop does not close",
            {"mismatch": mismatch, "threshold": threshold, "termination": traj.termination},
        )
    logger.log_orbit_refined(loop.period, mismatch)
    return RefinedOrbit(state=state, period=loop.period, mismatch=mismatch)
