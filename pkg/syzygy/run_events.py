"""
Syzygy Run Event Types

Defines the structured events emitted while simulating, scanning,
verifying and minimizing.
"""

from enum import Enum


class EventType(str, Enum):
    """Run event types."""

    # Run lifecycle
    RUN_STARTED = "RUN_STARTED"
    RUN_COMPLETED = "RUN_COMPLETED"
    RUN_FAILED = "RUN_FAILED"

    # Integration
    INTEGRATION_COMPLETED = "INTEGRATION_COMPLETED"
    INTEGRATION_TERMINATED = "INTEGRATION_TERMINATED"
    CONSERVATION_DRIFT = "CONSERVATION_DRIFT"
    ECLIPSES_DETECTED = "ECLIPSES_DETECTED"
    RANDOM_RUN_REJECTED = "RANDOM_RUN_REJECTED"

    # Verification
    CHECK_PASSED = "CHECK_PASSED"
    CHECK_FAILED = "CHECK_FAILED"
    SCAN_COMPLETED = "SCAN_COMPLETED"

    # Variational search
    MINIMIZER_STARTED = "MINIMIZER_STARTED"
    MINIMIZER_CONVERGED = "MINIMIZER_CONVERGED"
    MINIMIZER_STALLED = "MINIMIZER_STALLED"
    HARMONICS_DOUBLED = "HARMONICS_DOUBLED"
    ORBIT_REFINED = "ORBIT_REFINED"

    # I/O and configuration
    OUTPUT_WRITTEN = "OUTPUT_WRITTEN"
    CONFIG_REJECTED = "CONFIG_REJECTED"


class EventCategory(str, Enum):
    """Categories for grouping run events."""

    LIFECYCLE = "lifecycle"
    SIMULATION = "simulation"
    VERIFICATION = "verification"
    OPTIMIZATION = "optimization"
    IO = "io"
    CONFIG = "config"


class EventSeverity(str, Enum):
    """Severity levels for run events."""

    INFO = "info"  # Normal operations
    WARNING = "warning"  # Degraded result
    ERROR = "error"  # Failed step
    CRITICAL = "critical"  # Invariant violated


class EventOutcome(str, Enum):
    """Outcome of the reported step."""

    SUCCESS = "success"
    FAILURE = "failure"
    ERROR = "error"


# Event type to category/severity mapping
EVENT_METADATA = {
    EventType.RUN_STARTED: (EventCategory.LIFECYCLE, EventSeverity.INFO),
    EventType.RUN_COMPLETED: (EventCategory.LIFECYCLE, EventSeverity.INFO),
    EventType.RUN_FAILED: (EventCategory.LIFECYCLE, EventSeverity.ERROR),
    EventType.INTEGRATION_COMPLETED: (EventCategory.SIMULATION, EventSeverity.INFO),
    EventType.INTEGRATION_TERMINATED: (EventCategory.SIMULATION, EventSeverity.WARNING),
    EventType.CONSERVATION_DRIFT: (EventCategory.SIMULATION, EventSeverity.WARNING),
    EventType.ECLIPSES_DETECTED: (EventCategory.SIMULATION, EventSeverity.INFO),
    EventType.RANDOM_RUN_REJECTED: (EventCategory.SIMULATION, EventSeverity.WARNING),
    EventType.CHECK_PASSED: (EventCategory.VERIFICATION, EventSeverity.INFO),
    EventType.CHECK_FAILED: (EventCategory.VERIFICATION, EventSeverity.ERROR),
    EventType.SCAN_COMPLETED: (EventCategory.VERIFICATION, EventSeverity.INFO),
    EventType.MINIMIZER_STARTED: (EventCategory.OPTIMIZATION, EventSeverity.INFO),
    EventType.MINIMIZER_CONVERGED: (EventCategory.OPTIMIZATION, EventSeverity.INFO),
    EventType.MINIMIZER_STALLED: (EventCategory.OPTIMIZATION, EventSeverity.WARNING),
    EventType.HARMONICS_DOUBLED: (EventCategory.OPTIMIZATION, EventSeverity.INFO),
    EventType.ORBIT_REFINED: (EventCategory.OPTIMIZATION, EventSeverity.INFO),
    EventType.OUTPUT_WRITTEN: (EventCategory.IO, EventSeverity.INFO),
    EventType.CONFIG_REJECTED: (EventCategory.CONFIG, EventSeverity.ERROR),
}
