"""Masses, planar configurations and their scalar invariants.

Conventions:
- G = 1 units throughout
- positions and velocities are ``(3, 2)`` arrays, row i is body i
- s_k is the squared length of the side opposite body k
  (s1 = |x2 - x3|^2, s2 = |x3 - x1|^2, s3 = |x1 - x2|^2)
- the signed area is positive for counterclockwise order 1 -> 2 -> 3
- K = sum m_i |v_i|^2 is twice the kinetic energy, L = K/2 + U, energy = K/2 - U

The array kernels (``side_squares``, ``signed_area``, ``jacobi_vectors``...)
accept leading batch dimensions.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from syzygy.errors import CollisionError, DegenerateError

# s_k below this fraction of I1 counts as a collision when U is needed
COLLISION_TOL = 1e-12

SQRT3 = float(np.sqrt(3.0))


@dataclass(frozen=True)
class MassTriple:
    """Three positive masses with the derived constants used everywhere."""

    m1: float
    m2: float
    m3: float

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "m3"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be a positive finite mass, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text: str) -> "MassTriple":
        """Parse ``"a,b,c"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated masses, got {text!r}")
        return cls(*(float(p) for p in parts))

    @classmethod
    def equal(cls) -> "MassTriple":
        return cls(1.0, 1.0, 1.0)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3])

    @property
    def M(self) -> float:
        return self.m1 + self.m2 + self.m3

    @property
    def c(self) -> float:
        """c(m) = m1 m2 m3 / M."""
        return self.m1 * self.m2 * self.m3 / self.M

    @property
    def p(self) -> np.ndarray:
        """Weights p_k = m_i m_j / M, so that I = sum p_k s_k."""
        return np.array([self.m2 * self.m3, self.m3 * self.m1, self.m1 * self.m2]) / self.M

    @property
    def pair_products(self) -> np.ndarray:
        """a_k = m_i m_j, the coefficient of 1/sqrt(s_k) in U."""
        return np.array([self.m2 * self.m3, self.m3 * self.m1, self.m1 * self.m2])

    @property
    def mu1(self) -> float:
        return self.m1 * self.m2 / (self.m1 + self.m2)

    @property
    def mu2(self) -> float:
        return self.m3 * (self.m1 + self.m2) / self.M

    def is_equal(self) -> bool:
        return self.m1 == self.m2 == self.m3

    def as_list(self) -> list[float]:
        return [self.m1, self.m2, self.m3]

    def permuted(self, order: tuple[int, int, int]) -> "MassTriple":
        """Masses relabelled so that new body k is old body ``order[k]``."""
        values = self.as_list()
        return MassTriple(*(values[i] for i in order))


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BodyState:
    """Positions and velocities of the three bodies at time t."""

    x: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros((3, 2)))
    t: float = 0.0

    def __post_init__(self) -> None:
        x = _frozen(self.x)
        v = _frozen(self.v)
        if x.shape != (3, 2) or v.shape != (3, 2):
            raise ValueError(f"positions and velocities must be (3, 2), got {x.shape}, {v.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_flat(cls, y: np.ndarray, t: float = 0.0) -> "BodyState":
        """Build from the 12-vector (x1x, x1y, x2x, ..., v3y)."""
        y = np.asarray(y, dtype=float)
        return cls(x=y[:6].reshape(3, 2), v=y[6:12].reshape(3, 2), t=t)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.v.ravel()])

    def record(self) -> tuple[float, ...]:
        """The 13-number CSV record (t, positions, velocities)."""
        return (self.t, *(float(u) for u in self.flat()))

    def with_time(self, t: float) -> "BodyState":
        return BodyState(x=self.x, v=self.v, t=t)

    def scaled(self, sigma: float) -> "BodyState":
        """Positions scaled by sigma, velocities by sigma^(-1/2) (Kepler scaling)."""
        return BodyState(x=self.x * sigma, v=self.v / np.sqrt(sigma), t=self.t * sigma**1.5)

    @property
    def x1(self) -> np.ndarray:
        return self.x[0]

    @property
    def x2(self) -> np.ndarray:
        return self.x[1]

    @property
    def x3(self) -> np.ndarray:
        return self.x[2]

    @property
    def v1(self) -> np.ndarray:
        return self.v[0]

    @property
    def v2(self) -> np.ndarray:
        return self.v[1]

    @property
    def v3(self) -> np.ndarray:
        return self.v[2]


@dataclass(frozen=True)
class TriangleInvariants:
    s1: float
    s2: float
    s3: float
    delta: float
    I1: float
    I: float
    U: float
    z: float

    @property
    def s(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])


@dataclass(frozen=True)
class JacobiPair:
    """Mass-weighted Jacobi coordinates read as complex numbers."""

    z1: complex
    z2: complex

    @property
    def norm_squared(self) -> float:
        return abs(self.z1) ** 2 + abs(self.z2) ** 2


class Conserved(NamedTuple):
    energy: float
    J: float
    P: np.ndarray


class KineticSplit(NamedTuple):
    """Twice the kinetic energy split into its four orthogonal parts."""

    dilation: float
    shape: float
    rotation: float
    translation: float
    total: float


# --- array kernels -------------------------------------------------------


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Out-of-plane component of the planar cross product."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def side_squares(x: np.ndarray) -> np.ndarray:
    """Squared side lengths (s1, s2, s3) of configurations shaped (..., 3, 2)."""
    x = np.asarray(x, dtype=float)
    d1 = x[..., 1, :] - x[..., 2, :]
    d2 = x[..., 2, :] - x[..., 0, :]
    d3 = x[..., 0, :] - x[..., 1, :]
    return np.stack([(d1 * d1).sum(-1), (d2 * d2).sum(-1), (d3 * d3).sum(-1)], axis=-1)


def signed_area(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 0.5 * cross2(x[..., 1, :] - x[..., 0, :], x[..., 2, :] - x[..., 0, :])


def normalized_area(s: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """z = (4/sqrt 3) delta / I1, clipped to [-1, 1]."""
    I1 = np.sum(s, axis=-1) / 3.0
    return np.clip(4.0 / SQRT3 * delta / I1, -1.0, 1.0)


def heron_defect(s: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """16 delta^2 - (2 s1 s2 + 2 s2 s3 + 2 s3 s1 - s1^2 - s2^2 - s3^2)."""
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
    return 16.0 * delta**2 - (2 * s1 * s2 + 2 * s2 * s3 + 2 * s3 * s1 - s1**2 - s2**2 - s3**2)


def potential(m: MassTriple, s: np.ndarray) -> np.ndarray:
    """U = sum m_i m_j / r_ij from squared sides; raises on collision."""
    s = np.asarray(s, dtype=float)
    I1 = np.sum(s, axis=-1, keepdims=True) / 3.0
    if np.any(s <= COLLISION_TOL * I1):
        raise CollisionError("binary collision: potential undefined", {"s": s.tolist()})
    return np.sum(m.pair_products / np.sqrt(s), axis=-1)


def jacobi_vectors(m: MassTriple, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complex Jacobi coordinates of (..., 3, 2) positions (or velocities)."""
    x = np.asarray(x, dtype=float)
    c = x[..., 0] + 1j * x[..., 1]
    z1 = np.sqrt(m.mu1) * (c[..., 1] - c[..., 0])
    inner = (m.m1 * c[..., 0] + m.m2 * c[..., 1]) / (m.m1 + m.m2)
    z2 = np.sqrt(m.mu2) * (c[..., 2] - inner)
    return z1, z2


# --- operations ----------------------------------------------------------


def invariants(m: MassTriple, state: BodyState) -> TriangleInvariants:
    """All scalar invariants of one configuration.

    Raises:
        CollisionError: If any s_k vanishes (U undefined)
    """
    s = side_squares(state.x)
    delta = float(signed_area(state.x))
    I1 = float(s.sum() / 3.0)
    if I1 <= 0.0:
        raise CollisionError("triple collision: all bodies coincide")
    U = float(potential(m, s))
    return TriangleInvariants(
        s1=float(s[0]),
        s2=float(s[1]),
        s3=float(s[2]),
        delta=delta,
        I1=I1,
        I=float(m.p @ s),
        U=U,
        z=float(normalized_area(s, delta)),
    )


def center_of_mass(m: MassTriple, state: BodyState) -> tuple[np.ndarray, np.ndarray]:
    w = m.array[:, None]
    return (w * state.x).sum(0) / m.M, (w * state.v).sum(0) / m.M


def kinetic_energy(m: MassTriple, state: BodyState) -> float:
    """K = sum m_i |v_i|^2 (twice the kinetic energy)."""
    return float(m.array @ (state.v**2).sum(-1))


def conserved(m: MassTriple, state: BodyState) -> Conserved:
    inv = invariants(m, state)
    K = kinetic_energy(m, state)
    J = float(m.array @ cross2(state.x, state.v))
    P = (m.array[:, None] * state.v).sum(0)
    return Conserved(energy=0.5 * K - inv.U, J=J, P=P)


def center_and_project(m: MassTriple, state: BodyState) -> BodyState:
    """Center the state and remove its rigid-rotation velocity so that J = 0.

    Raises:
        DegenerateError: At a triple collision point (I = 0)
    """
    com, vcom = center_of_mass(m, state)
    x = state.x - com
    v = state.v - vcom
    w = m.array
    I = float(w @ (x**2).sum(-1))
    scale = float(w @ (state.x**2).sum(-1))
    if I <= 1e-24 * scale or I == 0.0:
        raise DegenerateError("triple collision point: moment of inertia vanishes")
    J = float(w @ cross2(x, v))
    perp = np.stack([-x[:, 1], x[:, 0]], axis=-1)
    v = v - (J / I) * perp
    return BodyState(x=x, v=v, t=state.t)


def jacobi_map(m: MassTriple, state: BodyState) -> JacobiPair:
    z1, z2 = jacobi_vectors(m, state.x)
    return JacobiPair(z1=complex(z1), z2=complex(z2))


def saari_decomposition(m: MassTriple, state: BodyState) -> KineticSplit:
    """Split K into dilation, shape, rotation and translation parts.

    Computed in Jacobi coordinates Z: with <a, b> = sum conj(a) b,
    R^2 = |Z|^2, R Rdot = Re<Z, Zdot>, J = Im<Z, Zdot>, and the shape part is
    what remains of |Zdot|^2. It equals (R^2/4) lambda K_shape.

    Raises:
        DegenerateError: At I = 0
    """
    _, vcom = center_of_mass(m, state)
    translation = m.M * float(vcom @ vcom)
    z1, z2 = jacobi_vectors(m, state.x)
    w1, w2 = jacobi_vectors(m, state.v)
    I = abs(z1) ** 2 + abs(z2) ** 2
    if I <= 0.0:
        raise DegenerateError("triple collision point: moment of inertia vanishes")
    inner = np.conj(z1) * w1 + np.conj(z2) * w2
    Kcm = abs(w1) ** 2 + abs(w2) ** 2
    dilation = inner.real**2 / I
    rotation = inner.imag**2 / I
    shape = Kcm - dilation - rotation
    return KineticSplit(
        dilation=float(dilation),
        shape=float(max(shape, 0.0)),
        rotation=float(rotation),
        translation=translation,
        total=kinetic_energy(m, state),
    )
