"""The shape sphere and its mass-dependent conformal geometry.

Coordinates come from the equal-mass Hopf vector w = (w0, w1, w2, w3):
sin(phi) = w3/w0 = z and theta = atan2(w2, w1). Normalized squared sides are
s_k/I1 = 1 - cos(phi) cos(theta - theta_k) with binary collision longitudes
theta_k = (pi/3, -pi/3, pi). For masses m the shape metric is the round
metric times the conformal factor lambda = 3 c(m) / Ihat^2, Ihat = sum p_k shat_k.

Array kernels take ``phi``/``theta`` (or ``(..., 3, 2)`` positions) with
arbitrary leading dimensions.
"""

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import null_space

from syzygy.errors import DegenerateError, PoleError
from syzygy.triangle_core import (
    SQRT3,
    BodyState,
    JacobiPair,
    MassTriple,
    TriangleInvariants,
    center_and_project,
    cross2,
    heron_defect,
    jacobi_vectors,
    side_squares,
    signed_area,
)

EQUAL = MassTriple(1.0, 1.0, 1.0)

COLLISION_LONGITUDES = np.array([np.pi / 3, -np.pi / 3, np.pi])

POLE_TOL = 1e-12

# Maps (s1, s2, s3, delta) to (w0, w1, w2, w3) for equal-mass Jacobi coordinates
CONE_MATRIX = np.array(
    [
        [1 / 6, 1 / 6, 1 / 6, 0.0],
        [-1 / 6, -1 / 6, 2 / 6, 0.0],
        [-1 / (2 * SQRT3), 1 / (2 * SQRT3), 0.0, 0.0],
        [0.0, 0.0, 0.0, 2 / SQRT3],
    ]
)
CONE_MATRIX_INV = np.linalg.inv(CONE_MATRIX)


@dataclass(frozen=True)
class ShapePoint:
    I: float
    phi: float
    theta: float
    pole: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pole", bool(np.cos(self.phi) < POLE_TOL))

    @property
    def longitude(self) -> float:
        """theta, refused at the Lagrange poles where it is meaningless."""
        if self.pole:
            raise PoleError("longitude undefined at a Lagrange point", {"phi": self.phi})
        return self.theta

    @property
    def z(self) -> float:
        return float(np.sin(self.phi))


@dataclass(frozen=True)
class ShapeVelocity:
    Idot: float
    phidot: float
    thetadot: float

    def kinetic_shape(self, phi: float) -> float:
        """phidot^2 + cos^2(phi) thetadot^2."""
        return self.phidot**2 + np.cos(phi) ** 2 * self.thetadot**2


@dataclass(frozen=True)
class ConeVector:
    w0: float
    w1: float
    w2: float
    w3: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.w0, self.w1, self.w2, self.w3])

    @property
    def residual(self) -> float:
        """w0^2 - (w1^2 + w2^2 + w3^2), zero on the cone."""
        return self.w0**2 - (self.w1**2 + self.w2**2 + self.w3**2)


@dataclass(frozen=True)
class CircleSpec:
    """A s1 + B s2 + C s3 + D delta = 0."""

    A: float
    B: float
    C: float
    D: float

    def __post_init__(self) -> None:
        if not np.any(np.abs(self.coefficients) > 0.0):
            raise ValueError("circle coefficients must not all vanish")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D], dtype=float)

    def is_meridian(self, tol: float = 1e-12) -> bool:
        scale = float(np.abs(self.coefficients).max())
        return abs(self.A + self.B + self.C) <= tol * scale and abs(self.D) <= tol * scale


@dataclass(frozen=True)
class Intertwiner:
    """L(z1, z2) = (alpha z1, beta z1 + gamma z2)."""

    alpha: complex
    beta: complex
    gamma: complex

    @property
    def det(self) -> complex:
        return self.alpha * self.gamma

    def apply(self, pair: JacobiPair) -> JacobiPair:
        return JacobiPair(
            z1=self.alpha * pair.z1,
            z2=self.beta * pair.z1 + self.gamma * pair.z2,
        )


# --- array kernels -------------------------------------------------------


def hopf_vector(x: np.ndarray) -> np.ndarray:
    """Equal-mass Hopf vector (w0, w1, w2, w3) of positions (..., 3, 2)."""
    z1, z2 = jacobi_vectors(EQUAL, x)
    a1 = np.abs(z1) ** 2
    a2 = np.abs(z2) ** 2
    return np.stack(
        [0.5 * (a1 + a2), 0.5 * (a1 - a2), (z1 * np.conj(z2)).real, (np.conj(z1) * z2).imag],
        axis=-1,
    )


def hopf_rate(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Time derivative of the Hopf vector along velocities v."""
    z1, z2 = jacobi_vectors(EQUAL, x)
    d1, d2 = jacobi_vectors(EQUAL, v)
    r1 = (np.conj(z1) * d1).real
    r2 = (np.conj(z2) * d2).real
    return np.stack(
        [
            r1 + r2,
            r1 - r2,
            (d1 * np.conj(z2) + z1 * np.conj(d2)).real,
            (np.conj(d1) * z2 + np.conj(z1) * d2).imag,
        ],
        axis=-1,
    )


def shape_angles(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(phi, theta) of positions (..., 3, 2)."""
    w = hopf_vector(x)
    phi = np.arctan2(w[..., 3], np.hypot(w[..., 1], w[..., 2]))
    return phi, longitude(w)


def longitude(w: np.ndarray) -> np.ndarray:
    """theta = atan2(w2, w1) folded into (-pi, pi]."""
    theta = np.arctan2(w[..., 2], w[..., 1])
    return np.where(theta <= -np.pi, np.pi, theta)


def zdot(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rate of z = w3/w0, regular at the poles and on the equator."""
    w = hopf_vector(x)
    wd = hopf_rate(x, v)
    return (wd[..., 3] * w[..., 0] - w[..., 3] * wd[..., 0]) / w[..., 0] ** 2


def kinetic_shape(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """phidot^2 + cos^2(phi) thetadot^2, as |d/dt (w/w0)|^2 on the unit sphere."""
    w = hopf_vector(x)
    wd = hopf_rate(x, v)
    w0 = w[..., :1]
    u_dot = (wd[..., 1:] * w0 - w[..., 1:] * wd[..., :1]) / w0**2
    return np.sum(u_dot**2, axis=-1)


def shape_hat(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Normalized squared sides shat_k = 1 - cos(phi) cos(theta - theta_k)."""
    phi = np.asarray(phi, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    return 1.0 - np.cos(phi) * np.cos(theta - COLLISION_LONGITUDES)


def gammas(theta: np.ndarray) -> np.ndarray:
    return np.cos(np.asarray(theta, dtype=float)[..., None] - COLLISION_LONGITUDES)


def moment_ratio(m: MassTriple, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Ihat = I / I1 = sum p_k shat_k."""
    return shape_hat(phi, theta) @ m.p


def conformal_factor_at(m: MassTriple, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return 3.0 * m.c / moment_ratio(m, phi, theta) ** 2


def dlog_moment_ratio_dphi(m: MassTriple, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    g = gammas(theta)
    return np.sin(phi) * (g @ m.p) / moment_ratio(m, phi, theta)


def dlog_lambda_dphi_at(m: MassTriple, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return -2.0 * dlog_moment_ratio_dphi(m, phi, theta)


def cot_dlog_lambda_shat(m: MassTriple, shat: np.ndarray) -> np.ndarray:
    """cot(phi) d(log lambda)/d(phi) from normalized sides.

    Uses cos(phi) gamma_k = 1 - shat_k, so the product is smooth through the
    equator and exact at the poles.
    """
    return -2.0 * ((1.0 - shat) @ m.p) / (shat @ m.p)


def cot_dlog_lambda_dphi(m: MassTriple, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return cot_dlog_lambda_shat(m, shape_hat(phi, theta))


def cot_dU_dphi_shat(m: MassTriple, shat: np.ndarray, I) -> np.ndarray:
    """cot(phi) dU/dphi at fixed I from normalized sides.

    Raises:
        DegenerateError: At a binary collision point
    """
    if np.any(shat <= 0.0):
        raise DegenerateError("binary collision point on the shape sphere")
    a = m.pair_products
    Ihat = shat @ m.p
    cos_gamma = 1.0 - shat
    return (
        0.5
        / np.sqrt(I)
        * (
            Ihat**-0.5 * (cos_gamma @ m.p) * (shat**-0.5 @ a)
            - Ihat**0.5 * ((shat**-1.5 * cos_gamma) @ a)
        )
    )


def _potential_parts(m: MassTriple, phi, theta):
    shat = shape_hat(phi, theta)
    if np.any(shat <= 0.0):
        raise DegenerateError("binary collision point on the shape sphere")
    return shat, gammas(theta), shat @ m.p, m.pair_products


def potential_at(m: MassTriple, phi, theta, I) -> np.ndarray:
    """U at fixed I as a function of the shape: I^-1/2 Ihat^1/2 sum a_k shat_k^-1/2."""
    shat, _, Ihat, a = _potential_parts(m, phi, theta)
    return np.sqrt(Ihat / I) * (shat**-0.5 @ a)


def dU_dphi_at(m: MassTriple, phi, theta, I) -> np.ndarray:
    """dU/dphi at fixed I and theta via d shat_k / d phi = sin(phi) gamma_k."""
    shat, g, Ihat, a = _potential_parts(m, phi, theta)
    dshat = np.sin(np.asarray(phi, dtype=float))[..., None] * g
    dIhat = dshat @ m.p
    return (
        0.5
        / np.sqrt(I)
        * (Ihat**-0.5 * dIhat * (shat**-0.5 @ a) - Ihat**0.5 * ((shat**-1.5 * dshat) @ a))
    )


def cot_dU_dphi(m: MassTriple, phi, theta, I) -> np.ndarray:
    """cot(phi) dU/dphi, smooth through the equator."""
    return cot_dU_dphi_shat(m, shape_hat(phi, theta), I)


def ineq1_closed_form(m: MassTriple, phi, theta) -> np.ndarray:
    """sum p_k / sum p_k shat_k."""
    return float(m.p.sum()) / moment_ratio(m, phi, theta)


def ineq1_from_derivative(m: MassTriple, phi, theta) -> np.ndarray:
    """1 - (1/2) cot(phi) d(log lambda)/d(phi), taken literally (phi != 0)."""
    phi = np.asarray(phi, dtype=float)
    return 1.0 - 0.5 * np.cos(phi) / np.sin(phi) * dlog_lambda_dphi_at(m, phi, theta)


def ineq2(m: MassTriple, phi, theta, I=1.0) -> np.ndarray:
    """-cot(phi) dU/dphi."""
    return -cot_dU_dphi(m, phi, theta, I)


def shape_configuration(phi, theta) -> np.ndarray:
    """Equal-mass centered configuration with I1 = 1 realizing (phi, theta).

    Built by inverting the Hopf map with z1 real and non-negative.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    w0 = 0.5
    w1 = w0 * np.cos(phi) * np.cos(theta)
    w2 = w0 * np.cos(phi) * np.sin(theta)
    w3 = w0 * np.sin(phi)
    z1 = np.sqrt(np.maximum(w0 + w1, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z2 = np.where(
            z1 > 1e-150,
            (w2 + 1j * w3) / np.where(z1 > 1e-150, z1, 1.0),
            np.sqrt(np.maximum(w0 - w1, 0.0)) + 0j,
        )
    return _equal_mass_positions(z1 + 0j, z2)


def _equal_mass_positions(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Inverse of the equal-mass Jacobi map with the centroid at the origin."""
    a = np.sqrt(2.0) * z1
    b = z2 / np.sqrt(2.0 / 3.0)
    c1 = -a / 2 - b / 3
    c2 = a / 2 - b / 3
    c3 = 2 * b / 3
    c = np.stack([c1, c2, c3], axis=-1)
    return np.stack([c.real, c.imag], axis=-1)


def _normalize_for_masses(m: MassTriple, x: np.ndarray, I: float) -> np.ndarray:
    w = m.array[:, None]
    x = x - (w * x).sum(-2, keepdims=True) / m.M
    current = np.einsum("k,...kd,...kd->...", m.array, x, x)
    return x * np.sqrt(I / current)[..., None, None]


def lift_arrays(m: MassTriple, phi, theta, psi, I=1.0) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal unit-speed lift of the shape direction psi at (phi, theta).

    The direction psi is measured in the orthonormal (e_phi, e_theta) frame.
    Returns positions and velocities (..., 3, 2) centered for m with moment I,
    zero angular momentum, zero Idot and phidot^2 + cos^2(phi) thetadot^2 = 1.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    phi, theta, psi = np.broadcast_arrays(phi, theta, psi)
    u = np.stack([np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), np.sin(phi)], -1)
    e_phi = np.stack([-np.sin(phi) * np.cos(theta), -np.sin(phi) * np.sin(theta), np.cos(phi)], -1)
    e_theta = np.stack([-np.sin(theta), np.cos(theta), np.zeros_like(theta)], -1)
    u_dot = np.cos(psi)[..., None] * e_phi + np.sin(psi)[..., None] * e_theta

    z1 = np.sqrt(0.5 * (1.0 + u[..., 0]))
    z2 = 0.5 * (u[..., 1] + 1j * u[..., 2]) / z1
    d1 = 0.25 * u_dot[..., 0] / z1
    d2 = 0.5 * (u_dot[..., 1] + 1j * u_dot[..., 2]) / z1 - z2 * d1 / z1

    X = _equal_mass_positions(z1 + 0j, z2)
    V = _equal_mass_positions(d1 + 0j, d2)

    w = m.array[:, None]
    Xc = X - (w * X).sum(-2, keepdims=True) / m.M
    sigma = np.sqrt(I / np.einsum("k,...kd,...kd->...", m.array, Xc, Xc))[..., None, None]
    x = sigma * Xc
    v = sigma * (V - (w * V).sum(-2, keepdims=True) / m.M)

    # radial (dilation) and rigid-rotation components, both m-orthogonal to the shape
    radial = np.einsum("k,...kd,...kd->...", m.array, x, v) / I
    v = v - radial[..., None, None] * x
    perp = np.stack([-x[..., 1], x[..., 0]], axis=-1)
    J = np.einsum("k,...k->...", m.array, cross2(x, v))
    v = v - (J / I)[..., None, None] * perp

    v = v / np.sqrt(kinetic_shape(x, v))[..., None, None]
    return x, v


# --- operations ----------------------------------------------------------


def to_shape(m: MassTriple, state: BodyState) -> tuple[ShapePoint, ShapeVelocity]:
    """Shape coordinates and their rates.

    Raises:
        DegenerateError: At the triple collision point
    """
    s = side_squares(state.x)
    I1 = float(s.sum()) / 3.0
    if I1 <= 0.0:
        raise DegenerateError("triple collision point: shape undefined")
    w = hopf_vector(state.x)
    wd = hopf_rate(state.x, state.v)
    # arctan2 keeps cos(phi) at round-off size on the poles
    phi = float(np.arctan2(w[3], np.hypot(w[1], w[2])))
    theta = float(longitude(w))

    ds = 2.0 * np.array(
        [
            (state.x[1] - state.x[2]) @ (state.v[1] - state.v[2]),
            (state.x[2] - state.x[0]) @ (state.v[2] - state.v[0]),
            (state.x[0] - state.x[1]) @ (state.v[0] - state.v[1]),
        ]
    )
    point = ShapePoint(I=float(m.p @ s), phi=phi, theta=theta)
    if point.pole:
        phidot = thetadot = float("nan")
    else:
        zd = float(zdot(state.x, state.v))
        phidot = zd / np.cos(phi)
        thetadot = float((w[1] * wd[2] - w[2] * wd[1]) / (w[1] ** 2 + w[2] ** 2))
    return point, ShapeVelocity(Idot=float(m.p @ ds), phidot=phidot, thetadot=thetadot)


def shape_to_invariants(
    m: MassTriple, p: ShapePoint, with_potential: bool = True
) -> TriangleInvariants:
    """Invariants of any configuration with shape p and moment p.I.

    Raises:
        DegenerateError: If I <= 0, or if p is a binary collision point and
            the potential is requested
    """
    if p.I <= 0.0:
        raise DegenerateError("moment of inertia must be positive")
    shat = shape_hat(p.phi, p.theta)
    Ihat = float(shat @ m.p)
    I1 = p.I / Ihat
    s = I1 * shat
    if with_potential:
        if np.any(shat <= 1e-12):
            raise DegenerateError("binary collision point: potential undefined")
        U = float(m.pair_products @ s**-0.5)
    else:
        U = float("nan")
    return TriangleInvariants(
        s1=float(s[0]),
        s2=float(s[1]),
        s3=float(s[2]),
        delta=SQRT3 / 4.0 * I1 * np.sin(p.phi),
        I1=I1,
        I=p.I,
        U=U,
        z=float(np.sin(p.phi)),
    )


def shape_to_state(m: MassTriple, p: ShapePoint) -> BodyState:
    """A centered configuration at rest with shape p and moment p.I."""
    if p.I <= 0.0:
        raise DegenerateError("moment of inertia must be positive")
    x = _normalize_for_masses(m, shape_configuration(p.phi, p.theta), p.I)
    return BodyState(x=x)


def horizontal_lift(m: MassTriple, p: ShapePoint, direction: float) -> BodyState:
    """Zero-J, zero-Idot state moving through p at unit shape speed.

    Raises:
        PoleError: At a Lagrange point, where the (e_phi, e_theta) frame degenerates
    """
    if p.pole:
        raise PoleError("shape direction frame undefined at a Lagrange point")
    x, v = lift_arrays(m, p.phi, p.theta, direction, p.I)
    return center_and_project(m, BodyState(x=x, v=v))


def conformal_factor(m: MassTriple, p: ShapePoint) -> float:
    """lambda = 3 c(m) (I1/I)^2, independent of scale."""
    if p.I <= 0.0:
        raise DegenerateError("moment of inertia must be positive")
    return float(conformal_factor_at(m, p.phi, p.theta))


def dlog_lambda_dphi(m: MassTriple, p: ShapePoint) -> float:
    return float(dlog_lambda_dphi_at(m, p.phi, p.theta))


def dU_dphi(m: MassTriple, p: ShapePoint) -> float:
    """dU/dphi at fixed I and theta.

    Raises:
        DegenerateError: At a binary collision point
    """
    if p.I <= 0.0:
        raise DegenerateError("moment of inertia must be positive")
    return float(dU_dphi_at(m, p.phi, p.theta, p.I))


def cone_embed(source: Union[BodyState, JacobiPair]) -> ConeVector:
    """Quadratic invariants of a configuration (equal-mass) or of a Jacobi pair."""
    if isinstance(source, BodyState):
        w = hopf_vector(source.x)
        return ConeVector(*(float(c) for c in w))
    z1, z2 = source.z1, source.z2
    a1, a2 = abs(z1) ** 2, abs(z2) ** 2
    return ConeVector(
        w0=0.5 * (a1 + a2),
        w1=0.5 * (a1 - a2),
        w2=float((z1 * np.conj(z2)).real),
        w3=float((np.conj(z1) * z2).imag),
    )


def cone_from_invariants(s: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """(s1, s2, s3, delta) -> (w0, w1, w2, w3), batched."""
    v = np.concatenate([np.asarray(s, float), np.asarray(delta, float)[..., None]], axis=-1)
    return v @ CONE_MATRIX.T


def invariants_from_cone(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(w0, w1, w2, w3) -> ((s1, s2, s3), delta), batched."""
    v = np.asarray(w, float) @ CONE_MATRIX_INV.T
    return v[..., :3], v[..., 3]


def cone_residuals(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relative Hopf cone residual and relative Heron residual of configurations.

    Both are normalized by w0^2 (equivalently by I1^2/4).
    """
    w = hopf_vector(x)
    w0sq = w[..., 0] ** 2
    cone = (w0sq - np.sum(w[..., 1:] ** 2, axis=-1)) / w0sq
    s = side_squares(x)
    heron = heron_defect(s, signed_area(x)) / (36.0 * w0sq)
    return cone, heron


def hermitian(cone: ConeVector) -> np.ndarray:
    """H = [[|z1|^2, z1 conj z2], [z2 conj z1, |z2|^2]] from the cone vector."""
    return np.array(
        [
            [cone.w0 + cone.w1, cone.w2 - 1j * cone.w3],
            [cone.w2 + 1j * cone.w3, cone.w0 - cone.w1],
        ]
    )


def minkowski_product(a: ConeVector, b: ConeVector) -> float:
    """Polarization of det H, signature (+, -, -, -); (e0, e0) = 1."""
    return a.w0 * b.w0 - a.w1 * b.w1 - a.w2 * b.w2 - a.w3 * b.w3


def circle_contains(c: CircleSpec, p: ShapePoint) -> float:
    """Signed residual A s1 + B s2 + C s3 + D delta at the representative with I1 = 1."""
    shat = shape_hat(p.phi, p.theta)
    row = np.append(shat, SQRT3 / 4.0 * np.sin(p.phi))
    return float(row @ c.coefficients)


def meridian_circle(theta0: float) -> CircleSpec:
    """The great circle through both Lagrange points and the equator point theta0."""
    rows = np.vstack([np.ones(3), shape_hat(0.0, theta0)])
    abc = null_space(rows)[:, 0]
    return CircleSpec(A=float(abc[0]), B=float(abc[1]), C=float(abc[2]), D=0.0)


def circle_through(p1: ShapePoint, p2: ShapePoint, p3: ShapePoint) -> CircleSpec:
    rows = np.array(
        [np.append(shape_hat(p.phi, p.theta), SQRT3 / 4.0 * np.sin(p.phi)) for p in (p1, p2, p3)]
    )
    coeffs = null_space(rows)[:, 0]
    return CircleSpec(*(float(c) for c in coeffs))


def intertwiner(m: MassTriple, m_prime: MassTriple) -> Intertwiner:
    a = m.m1 / (m.m1 + m.m2)
    a_prime = m_prime.m1 / (m_prime.m1 + m_prime.m2)
    return Intertwiner(
        alpha=complex(np.sqrt(m_prime.mu1 / m.mu1)),
        beta=complex(-np.sqrt(m_prime.mu2 / m.mu1) * (a - a_prime)),
        gamma=complex(np.sqrt(m_prime.mu2 / m.mu2)),
    )


def _shape_distance(m: MassTriple, x: np.ndarray, y: np.ndarray) -> float:
    """Distance between normalized configurations, minimized over rotation."""
    w = m.array
    a = float(w @ np.sum(x * y, axis=-1))
    b = float(w @ (x[:, 1] * y[:, 0] - x[:, 0] * y[:, 1]))
    alpha = np.arctan2(b, a)
    rot = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    diff = x - y @ rot.T
    return float(np.sqrt(w @ np.sum(diff**2, axis=-1)))


def conformal_ratio_check(
    m: MassTriple,
    m_prime: MassTriple,
    p: ShapePoint,
    direction: float,
    h: float = 1e-4,
) -> tuple[float, float]:
    """Compare ds_m / ds_m' measured on configurations with the closed form.

    Returns:
        tuple: (numeric ratio, closed form sqrt(c(m)/c(m')) I_m'/I_m)

    Raises:
        PoleError: If cos(phi) is too small for a longitude displacement
    """
    if np.cos(p.phi) < 1e-6:
        raise PoleError("conformal check needs cos(phi) bounded away from 0")
    dphi = h * np.cos(direction)
    dtheta = h * np.sin(direction) / np.cos(p.phi)
    plus = shape_configuration(p.phi + dphi, p.theta + dtheta)
    minus = shape_configuration(p.phi - dphi, p.theta - dtheta)

    def distance(masses: MassTriple) -> float:
        return _shape_distance(
            masses,
            _normalize_for_masses(masses, plus, 1.0),
            _normalize_for_masses(masses, minus, 1.0),
        )

    numeric = distance(m) / distance(m_prime)
    ratio_I = float(moment_ratio(m_prime, p.phi, p.theta) / moment_ratio(m, p.phi, p.theta))
    closed = float(np.sqrt(m.c / m_prime.c) * ratio_I)
    return numeric, closed


def affine_metric_ratio(
    m: MassTriple,
    m_prime: MassTriple,
    state: BodyState,
    direction: complex = 1.0 + 0.0j,
    h: float = 1e-6,
) -> tuple[float, float]:
    """Conformal ratio read in the affine chart zeta = z2/z1 of each mass metric.

    The shape metric in that chart is |d zeta| / (1 + |zeta|^2) and the
    intertwiner acts on zeta as an affine map.

    Returns:
        tuple: (numeric ds_m' / ds_m, closed form |det L| I_m / I_m')
    """
    L = intertwiner(m, m_prime)
    pair = JacobiPair(*(complex(c) for c in jacobi_vectors(m, state.x)))
    if abs(pair.z1) == 0.0:
        raise DegenerateError("affine chart undefined at the 1-2 collision")
    zeta = pair.z2 / pair.z1
    step = h * direction / abs(direction)

    def image(u: complex) -> complex:
        return (L.beta + L.gamma * u) / L.alpha

    ds = 2 * abs(step) / (1 + abs(zeta) ** 2)
    zp = image(zeta)
    ds_prime = abs(image(zeta + step) - image(zeta - step)) / (1 + abs(zp) ** 2)
    image_pair = L.apply(pair)
    closed = abs(L.det) * pair.norm_squared / image_pair.norm_squared
    return ds_prime / ds, float(closed)


def shape_point(m: MassTriple, state: BodyState) -> ShapePoint:
    return to_shape(m, state)[0]


