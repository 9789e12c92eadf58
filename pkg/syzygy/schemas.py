"""Pydantic schemas for run configuration and reports."""

import json
from pathlib import Path
from typing import Any, Literal, get_args

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from syzygy.config import settings
from syzygy.errors import ConfigError

# ---------- Run configuration ----------


class IntegratorConfig(BaseModel):
    """Adaptive integrator tolerances and termination cutoffs."""

    model_config = ConfigDict(extra="forbid")

    rel_tol: float = Field(1e-10, gt=0, description="Relative error tolerance per step")
    abs_tol: float = Field(1e-12, gt=0, description="Absolute error tolerance per step")
    max_step: float | None = Field(None, gt=0, description="Largest allowed step")
    t_end: float = Field(10.0, gt=0, description="Integration end time")
    collision_cutoff: float = Field(
        1e-3, gt=0, description="Stop when min_k sqrt(s_k) / sqrt(I1) drops below this"
    )
    escape_cutoff: float = Field(1e4, gt=1, description="Stop when I / I0 exceeds this")
    triple_cutoff: float = Field(1e-4, gt=0, lt=1, description="Stop when I / I0 drops below this")
    refine_tol: float = Field(1e-12, gt=0, description="Eclipse root tolerance on |z|")
    grazing_tol: float = Field(
        1e-9, gt=0, description="|z| at a local minimum that counts as grazing"
    )
    conservation_tol: float = Field(1e-8, gt=0, description="Allowed energy and J drift")


InitialSource = Literal[
    "explicit", "lagrange-homothety", "lagrange-circular", "loop", "random-zero-j"
]
SOURCES: tuple[str, ...] = get_args(InitialSource)


class InitialConditionConfig(BaseModel):
    """Where the initial state comes from."""

    model_config = ConfigDict(extra="forbid")

    source: InitialSource = Field(..., description="Initial condition source")
    positions: list[list[float]] | None = Field(None, description="3x2 positions (explicit)")
    velocities: list[list[float]] | None = Field(None, description="3x2 velocities (explicit)")
    size: float = Field(1.0, gt=0, description="Moment of inertia (homothety)")
    rate: float = Field(0.0, le=0, description="Radial rate (homothety)")
    side: float = Field(1.0, gt=0, description="Side length (circular)")
    loop_path: Path | None = Field(None, description="Loop JSON file (loop)")
    periods: float = Field(1.0, gt=0, description="Periods to integrate (loop)")
    seed: int = Field(0, ge=0, description="Generator seed (random-zero-j)")
    kinetic_fraction: float = Field(0.5, gt=0, lt=1, description="K/2 as a fraction of U")

    @model_validator(mode="after")
    def check_source_fields(self) -> "InitialConditionConfig":
        if self.source == "explicit":
            if self.positions is None:
                raise ValueError("explicit source requires positions")
            for name in ("positions", "velocities"):
                value = getattr(self, name)
                if value is not None and (len(value) != 3 or any(len(r) != 2 for r in value)):
                    raise ValueError(f"{name} must be a 3x2 array")
        if self.source == "loop" and self.loop_path is None:
            raise ValueError("loop source requires loop_path")
        return self


class VerificationToggles(BaseModel):
    """Which criteria ``verify`` runs."""

    model_config = ConfigDict(extra="forbid")

    theorem2: bool = True
    q_scan: bool = True
    inequalities: bool = True
    conformal: bool = True
    cone: bool = True
    corollary: bool = True
    recurrence: bool = True
    lagrange: bool = True
    negated_q_diagnostic: bool = True
    random_runs: int = Field(20, ge=0, description="Random zero-J trajectories")
    random_span: float = Field(100.0, gt=0, description="Run length in characteristic times")
    random_max_attempts: int = Field(
        400, ge=1, description="Seeds drawn at most while collecting the random runs"
    )
    residual_tol: float = Field(1e-6, gt=0)
    lagrange_periods: int = Field(5, ge=1, description="Periods of the Lagrange circular check")
    samples: int = Field(100, ge=1, description="Random shape points for the conformal check")
    triangles: int = Field(100_000, ge=1, description="Random triangles for the cone check")
    eight_loop: Path | None = Field(None, description="Converged eight loop to verify along")


class ScanConfig(BaseModel):
    """Shape-sphere grid scans."""

    model_config = ConfigDict(extra="forbid")

    grid: int = Field(200, ge=2, description="Nodes per axis")
    directions: int = Field(8, ge=1, description="Unit shape-velocity directions per node")
    extra_masses: list[list[float]] = Field(
        default_factory=lambda: [[1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [3.0, 4.0, 5.0]],
        description="Mass triples covered by verify scans",
    )


class RunConfig(BaseModel):
    """A complete, reproducible run description."""

    model_config = ConfigDict(extra="forbid")

    masses: list[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0])
    initial: InitialConditionConfig = Field(
        default_factory=lambda: InitialConditionConfig(source="lagrange-circular")
    )
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    output_dir: Path = Field(
        default_factory=lambda: settings.output_dir,
        description="Directory for CSV/JSON artifacts",
    )
    verify: VerificationToggles = Field(default_factory=VerificationToggles)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    harmonics: int = Field(48, ge=2, description="Fourier harmonics for loop searches")

    @field_validator("masses")
    @classmethod
    def validate_masses(cls, v: list[float]) -> list[float]:
        if len(v) != 3:
            raise ValueError("exactly three masses are required")
        if any(not (m > 0) for m in v):
            raise ValueError("masses must be strictly positive")
        return v

    @classmethod
    def load(cls, path: Path | str) -> "RunConfig":
        """Parse a single JSON file.

        Raises:
            ConfigError: If the file is missing, not JSON, or fails validation
        """
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.parse(raw)

    @classmethod
    def parse(cls, raw: Any) -> "RunConfig":
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            raise ConfigError(
                "invalid run configuration",
                {"errors": [error_detail(e) for e in exc.errors()]},
            ) from exc

    def with_overrides(
        self,
        masses: list[float] | None = None,
        tmax: float | None = None,
        rtol: float | None = None,
        atol: float | None = None,
        seed: int | None = None,
        out: Path | None = None,
        grid: int | None = None,
        refine_tol: float | None = None,
        harmonics: int | None = None,
        source: str | None = None,
        loop_path: Path | None = None,
        periods: float | None = None,
        kinetic_fraction: float | None = None,
    ) -> "RunConfig":
        """Return a validated copy with command-line flags applied."""
        data = self.model_dump(mode="json")
        if masses is not None:
            data["masses"] = list(masses)
        if tmax is not None:
            data["integrator"]["t_end"] = tmax
        if rtol is not None:
            data["integrator"]["rel_tol"] = rtol
        if atol is not None:
            data["integrator"]["abs_tol"] = atol
        if refine_tol is not None:
            data["integrator"]["refine_tol"] = refine_tol
        if seed is not None:
            data["initial"]["seed"] = seed
        if out is not None:
            data["output_dir"] = str(out)
        if grid is not None:
            data["scan"]["grid"] = grid
        if harmonics is not None:
            data["harmonics"] = harmonics
        if source is not None:
            data["initial"]["source"] = source
        if loop_path is not None:
            data["initial"]["loop_path"] = str(loop_path)
        if periods is not None:
            data["initial"]["periods"] = periods
        if kinetic_fraction is not None:
            data["initial"]["kinetic_fraction"] = kinetic_fraction
        return self.parse(data)


def error_detail(error: dict[str, Any]) -> dict[str, str]:
    return {
        "field": ".".join(str(p) for p in error.get("loc", ())),
        "issue": str(error.get("msg", "invalid")),
    }


# ---------- Eclipse events ----------


class EclipseEvent(BaseModel):
    """One collinearity along a trajectory."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    t: float = Field(..., description="Event time")
    symbol: int = Field(..., ge=1, le=3, description="Index of the middle body")
    direction: int = Field(..., ge=-1, le=1, description="Sign of zdot at the crossing")
    grazing: bool = Field(False, description="Tangential zero without sign change")


# ---------- Reports ----------


class ResidualReport(BaseModel):
    """Maximum relative residual of d/dt(f zdot) + q z along a trajectory."""

    model_config = ConfigDict(extra="forbid")

    max_residual: float
    argmax_t: float
    h_used: float
    tolerance_pass: bool


class MonotoneReport(BaseModel):
    """f zdot monotonicity on the single-sign intervals of z."""

    model_config = ConfigDict(extra="forbid")

    intervals: int
    violations: int
    worst_increase: float = Field(..., description="Largest wrong-way change, relative")
    passed: bool


class CorollaryReport(BaseModel):
    """Critical points of z between successive eclipses."""

    model_config = ConfigDict(extra="forbid")

    arcs: int
    critical_points: list[int] = Field(..., description="Count of zdot sign changes per arc")
    nondegenerate: bool = Field(..., description="z * zddot < 0 at every critical point")
    passed: bool


class RecurrenceReport(BaseModel):
    """Observed eclipse gaps against the K/delta bound."""

    model_config = ConfigDict(extra="forbid")

    eclipses: int
    max_gap: float | None
    bound_violations: int
    passed: bool


class ActionReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    action: float
    gradient_norm: float
    min_distance: float
    equation_residual: float
    iterations: int = 0
    converged: bool = False
