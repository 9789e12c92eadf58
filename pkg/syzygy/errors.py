"""Error types and the standard error envelope for Syzygy.

Every failure the library can report derives from ``SyzygyError`` and carries
a machine-readable ``code`` and the process ``exit_code`` the CLI uses for it.

Error codes:
- COLLISION: a pairwise distance vanished where the potential is needed
- DEGENERATE: triple collision point (I = 0) or binary collision on the sphere
- POLE: longitude requested at a Lagrange pole where it is undefined
- STIFFNESS: integrator step size underflowed
- AMBIGUOUS: eclipse symbol undefined (near binary collision)
- NONREDUCED: angular momentum is not zero where the reduced formulas need it
- COLLISION_APPROACH: action descent approached a collision
- NONPERIODIC: return-map mismatch above threshold
- CONFIG_ERROR: invalid run configuration
- INVARIANT_VIOLATION: an internal check failed
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class SyzygyError(Exception):
    """Base exception for all Syzygy errors."""

    code: str = "INTERNAL_ERROR"
    exit_code: int = 1

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_response(self) -> dict[str, Any]:
        """Render this error as a standard error envelope."""
        return create_error_response(self.code, self.message, self.details or None)


class CollisionError(SyzygyError):
    """Two bodies coincide where the potential or force is required."""

    code = "COLLISION"
    exit_code = 3


class DegenerateError(SyzygyError):
    """Triple collision point, or a binary collision point on the shape sphere."""

    code = "DEGENERATE"
    exit_code = 3


class PoleError(SyzygyError):
    """Longitude-dependent quantity requested at a Lagrange pole."""

    code = "POLE"


class StiffnessError(SyzygyError):
    """Integrator step size underflowed without a cutoff tripping."""

    code = "STIFFNESS"
    exit_code = 3


class AmbiguousError(SyzygyError):
    """Eclipse symbol undefined because two bodies nearly coincide."""

    code = "AMBIGUOUS"


class NonreducedError(SyzygyError):
    """Angular momentum is not zero within tolerance."""

    code = "NONREDUCED"


class CollisionApproachError(SyzygyError):
    """Action descent brought two bodies below the collision cutoff."""

    code = "COLLISION_APPROACH"
    exit_code = 3


class NonperiodicError(SyzygyError):
    """Integrated loop does not return to its initial state."""

    code = "NONPERIODIC"


class ConfigError(SyzygyError):
    """Run configuration could not be parsed or validated."""

    code = "CONFIG_ERROR"
    exit_code = 2


class InvariantViolation(SyzygyError):
    """An internal numerical invariant failed."""

    code = "INVARIANT_VIOLATION"


class ErrorObject(BaseModel):
    """Inner error object containing code, message, and optional details."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "code": "COLLISION",
                "message": "bodies 1 and 2 coincide",
            }
        }
    )

    code: str = Field(..., description="Machine-readable error code")
    message: str = Field(..., description="Human-readable error message")
    details: Optional[dict[str, Any]] = Field(None, description="Optional structured details")


class ErrorResponse(BaseModel):
    """Standard error envelope printed by the CLI on failure."""

    error: ErrorObject = Field(..., description="Error details")


def create_error_response(
    code: str,
    message: str,
    details: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    """Create a standard error response dict.

    Args:
        code: Machine-readable error code
        message: Human-readable error message
        details: Optional structured details

    Returns:
        dict: Error response conforming to ErrorResponse schema
    """
    error_obj: dict[str, Any] = {
        "error": {
            "code": code,
            "message": message,
        }
    }

    if details:
        error_obj["error"]["details"] = details

    return error_obj
