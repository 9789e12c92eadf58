"""
Syzygy Run Logging

Structured run events for simulations, scans, verifications and searches.
Separate from numeric output: events go to stderr so CSV and JSON bodies
stay byte-identical between runs.

Usage:
    from syzygy.run_log import run_logger

    run_logger.log_run_started(command="simulate", masses=[1.0, 2.0, 3.0])
"""

import json
import logging
import sys
import uuid
from datetime import datetime, timezone
from typing import Any, Optional

from syzygy.config import settings
from syzygy.run_events import (
    EVENT_METADATA,
    EventCategory,
    EventOutcome,
    EventSeverity,
    EventType,
)

LOGGER_NAME = "syzygy.run"


class RunLogger:
    """
    Structured logger for run events.

    Outputs JSON-formatted events to a dedicated logger.
    Each event includes: timestamp, event_id, event_type, category, severity,
    outcome, details, run_id and component.
    """

    def __init__(self, component: str = "syzygy", run_id: Optional[str] = None):
        """Initialize run logger with component name."""
        self.component = component
        self.run_id = run_id
        self.logger = self._configure_logger()

    def _configure_logger(self) -> logging.Logger:
        """Configure dedicated run logger with JSON output."""
        logger = logging.getLogger(LOGGER_NAME)
        logger.setLevel(settings.log_level)
        logger.propagate = False

        if not logger.handlers:
            stream = sys.stdout if settings.log_stream == "stdout" else sys.stderr
            handler = logging.StreamHandler(stream)
            handler.setFormatter(logging.Formatter("%(message)s"))
            logger.addHandler(handler)

        return logger

    def _generate_event_id(self) -> str:
        """Generate unique event ID."""
        return f"evt_{uuid.uuid4().hex[:12]}"

    def _get_timestamp(self) -> str:
        """Get current UTC timestamp in ISO format."""
        return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")

    def bind(self, run_id: str) -> "RunLogger":
        """Return a logger for the same component tagged with ``run_id``."""
        return RunLogger(component=self.component, run_id=run_id)

    def log(
        self,
        event_type: EventType,
        outcome: EventOutcome = EventOutcome.SUCCESS,
        details: Optional[dict[str, Any]] = None,
        category_override: Optional[EventCategory] = None,
        severity_override: Optional[EventSeverity] = None,
    ) -> str:
        """
        Log a run event.

        Args:
            event_type: Type of event (from EventType enum)
            outcome: Result of the step
            details: Additional context (plain JSON values)
            category_override: Override default category
            severity_override: Override default severity

        Returns:
            Generated event_id for correlation
        """
        default_category, default_severity = EVENT_METADATA.get(
            event_type, (EventCategory.LIFECYCLE, EventSeverity.INFO)
        )
        severity = severity_override or default_severity

        event_id = self._generate_event_id()
        event = {
            "timestamp": self._get_timestamp(),
            "event_id": event_id,
            "event_type": event_type.value,
            "event_category": (category_override or default_category).value,
            "severity": severity.value,
            "outcome": outcome.value,
            "details": details or {},
            "run_id": self.run_id,
            "component": self.component,
        }

        level = {
            EventSeverity.INFO: logging.INFO,
            EventSeverity.WARNING: logging.WARNING,
            EventSeverity.ERROR: logging.ERROR,
            EventSeverity.CRITICAL: logging.CRITICAL,
        }[severity]
        self.logger.log(level, f"RUN: {json.dumps(event, separators=(',', ':'), default=str)}")

        return event_id

    # Convenience methods for common events

    def log_run_started(self, command: str, **details: Any) -> str:
        """Log the start of a CLI command or library run."""
        return self.log(EventType.RUN_STARTED, details={"command": command, **details})

    def log_run_completed(self, command: str, **details: Any) -> str:
        """Log clean completion."""
        return self.log(EventType.RUN_COMPLETED, details={"command": command, **details})

    def log_run_failed(self, command: str, code: str, message: str) -> str:
        """Log a run that ended with a SyzygyError."""
        return self.log(
            EventType.RUN_FAILED,
            outcome=EventOutcome.ERROR,
            details={"command": command, "code": code, "message": message},
        )

    def log_integration(self, reason: str, t_final: float, steps: int) -> str:
        """Log the end of an integration; non time-end reasons are warnings."""
        if reason == "time_end":
            return self.log(
                EventType.INTEGRATION_COMPLETED,
                details={"reason": reason, "t_final": t_final, "steps": steps},
            )
        return self.log(
            EventType.INTEGRATION_TERMINATED,
            outcome=EventOutcome.FAILURE,
            details={"reason": reason, "t_final": t_final, "steps": steps},
        )

    def log_conservation_drift(self, energy_drift: float, j_drift: float, tolerance: float) -> str:
        """Log conservation drift above tolerance."""
        return self.log(
            EventType.CONSERVATION_DRIFT,
            outcome=EventOutcome.FAILURE,
            details={"energy_drift": energy_drift, "j_drift": j_drift, "tolerance": tolerance},
        )

    def log_eclipses(self, count: int, grazing: int, sequence: str) -> str:
        """Log the eclipse summary of a trajectory."""
        return self.log(
            EventType.ECLIPSES_DETECTED,
            details={"count": count, "grazing": grazing, "sequence": sequence},
        )

    def log_random_run_rejected(self, seed: int, reason: str) -> str:
        """Log a random initial condition dropped from the sample."""
        return self.log(
            EventType.RANDOM_RUN_REJECTED,
            outcome=EventOutcome.FAILURE,
            details={"seed": seed, "reason": reason},
        )

    def log_check(self, name: str, passed: bool, **details: Any) -> str:
        """Log one verification criterion."""
        return self.log(
            EventType.CHECK_PASSED if passed else EventType.CHECK_FAILED,
            outcome=EventOutcome.SUCCESS if passed else EventOutcome.FAILURE,
            details={"check": name, **details},
        )

    def log_scan_completed(self, name: str, points: int, **minima: Any) -> str:
        """Log a finished grid scan with its minima."""
        return self.log(
            EventType.SCAN_COMPLETED, details={"scan": name, "points": points, **minima}
        )

    def log_minimizer_started(self, tag: str, harmonics: int, parameters: int) -> str:
        """Log the start of an action descent."""
        return self.log(
            EventType.MINIMIZER_STARTED,
            details={"tag": tag, "harmonics": harmonics, "parameters": parameters},
        )

    def log_minimizer_finished(
        self, converged: bool, action: float, gradient_norm: float, iterations: int
    ) -> str:
        """Log the end of an action descent."""
        return self.log(
            EventType.MINIMIZER_CONVERGED if converged else EventType.MINIMIZER_STALLED,
            outcome=EventOutcome.SUCCESS if converged else EventOutcome.FAILURE,
            details={
                "action": action,
                "gradient_norm": gradient_norm,
                "iterations": iterations,
            },
        )

    def log_harmonics_doubled(self, harmonics: int, residual: float) -> str:
        """Log a loop search retried on twice as many harmonics."""
        return self.log(
            EventType.HARMONICS_DOUBLED,
            details={"from": harmonics, "to": 2 * harmonics, "equation_residual": residual},
        )

    def log_orbit_refined(self, period: float, mismatch: float) -> str:
        """Log a loop refined into periodic initial conditions."""
        return self.log(
            EventType.ORBIT_REFINED, details={"period": period, "mismatch": mismatch}
        )

    def log_output_written(self, name: str, size: int) -> str:
        """Log an output artifact."""
        return self.log(EventType.OUTPUT_WRITTEN, details={"name": name, "bytes": size})

    def log_config_rejected(self, reason: str) -> str:
        """Log a configuration that failed validation."""
        return self.log(
            EventType.CONFIG_REJECTED,
            outcome=EventOutcome.FAILURE,
            details={"reason": reason},
        )


# Global run logger instance
run_logger = RunLogger()


def get_run_logger(component: str = "syzygy") -> RunLogger:
    """
    Get run logger instance for a component.

    Args:
        component: Name of the component (e.g., "nbody", "varfinder")

    Returns:
        RunLogger instance
    """
    return RunLogger(component=component)
