"""Eclipse symbols and sequences.

An eclipse gets the symbol k of the body lying between the other two.
Successive symbols form the eclipse sequence; for periodic orbits the
sequence reduces to a repeat unit and a count.
"""

from typing import TYPE_CHECKING, Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from syzygy.errors import AmbiguousError
from syzygy.schemas import EclipseEvent
from syzygy.triangle_core import BodyState, MassTriple, side_squares

if TYPE_CHECKING:
    from syzygy.nbody_dynamics import Trajectory

__all__ = [
    "EclipseEvent",
    "EclipseSequence",
    "classify",
    "periodic_reduce",
    "sequence",
]

AMBIGUITY_TOL = 1e-9


def classify(m: MassTriple, state_at_root: BodyState) -> int:
    """Index (1, 2 or 3) of the middle body of a collinear configuration.

    Positions are projected on the dominant axis of the configuration's second
    moment. The masses do not enter.

    Raises:
        AmbiguousError: If two projections coincide within 1e-9 sqrt(I1)
    """
    x = state_at_root.x - state_at_root.x.mean(axis=0)
    _, vecs = np.linalg.eigh(x.T @ x)
    axis = vecs[:, -1]
    proj = x @ axis
    I1 = float(side_squares(state_at_root.x).sum()) / 3.0
    gaps = np.abs(proj[:, None] - proj[None, :])[np.triu_indices(3, k=1)]
    if I1 == 0.0 or gaps.min() <= AMBIGUITY_TOL * np.sqrt(I1):
        raise AmbiguousError(
            "middle body undefined near a binary collision",
            {"projections": proj.tolist()},
        )
    return int(np.argsort(proj)[1]) + 1


class EclipseSequence(BaseModel):
    """Time-ordered eclipse events with optional period metadata."""

    model_config = ConfigDict(extra="forbid")

    events: list[EclipseEvent] = Field(default_factory=list)
    periods: Optional[int] = Field(None, ge=1, description="Number of periods spanned")

    @model_validator(mode="after")
    def check_order(self) -> "EclipseSequence":
        times = [e.t for e in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        return self

    @property
    def symbols(self) -> str:
        return "".join(str(e.symbol) for e in self.events)

    @property
    def times(self) -> list[float]:
        return [e.t for e in self.events]

    def __len__(self) -> int:
        return len(self.events)

    def transversal(self) -> "EclipseSequence":
        """The sequence without grazing events."""
        return EclipseSequence(
            events=[e for e in self.events if not e.grazing], periods=self.periods
        )

    def text(self) -> str:
        """Plain-text form such as ``123123 x3``."""
        if len(self.events) < 2:
            return f"{self.symbols} x1" if self.events else ""
        unit, count = periodic_reduce(self)
        return f"{unit} x{count}"

    def to_json(self) -> dict[str, Any]:
        unit: Optional[str]
        count: Optional[int]
        if len(self.events) >= 2:
            unit, count = periodic_reduce(self)
        else:
            unit, count = (self.symbols or None), (1 if self.events else 0)
        return {
            "symbols": self.symbols,
            "times": self.times,
            "grazing": [e.grazing for e in self.events],
            "unit": unit,
            "count": count,
        }


def sequence(traj: "Trajectory", periods: Optional[int] = None) -> EclipseSequence:
    return EclipseSequence(events=list(traj.events), periods=periods)


def _is_power(word: str, unit: str) -> bool:
    return len(word) % len(unit) == 0 and unit * (len(word) // len(unit)) == word


def periodic_reduce(seq: EclipseSequence) -> tuple[str, int]:
    """Repeat unit and count of an eclipse word.

    With period metadata the unit is the per-period word when the sequence is a
    power of it; otherwise the smallest unit whose power is the whole word.

    Raises:
        ValueError: For sequences shorter than two symbols
    """
    word = seq.symbols
    if len(word) < 2:
        raise ValueError("periodic reduction needs at least two symbols")
    if seq.periods and len(word) % seq.periods == 0:
        unit = word[: len(word) // seq.periods]
        if _is_power(word, unit):
            return unit, seq.periods
    for size in range(1, len(word) + 1):
        unit = word[:size]
        if _is_power(word, unit):
            return unit, len(word) // size
    raise AssertionError("unreachable: the word is a power of itself")
