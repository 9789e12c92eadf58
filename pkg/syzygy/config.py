"""Configuration module for Syzygy.

Loads process-level settings from environment variables (prefix ``SYZYGY_``)
with fallback to a local ``.env`` file. Run-level parameters (masses, initial
conditions, tolerances) are not settings: they live in ``syzygy.schemas.RunConfig``
and travel with each run so that results stay reproducible.

- ``SYZYGY_THREADS`` caps the worker pool used for parallel jobs
- ``SYZYGY_LOG_LEVEL`` controls the run-event logger
- ``SYZYGY_LOG_STREAM`` selects stderr (default) or stdout for run events
"""

import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="SYZYGY_",
        case_sensitive=False,
        extra="ignore",
    )

    environment: str = "development"
    log_level: str = "INFO"
    log_stream: Literal["stderr", "stdout"] = "stderr"

    # Worker cap for parallel sweeps; None means one worker per CPU
    threads: Optional[int] = Field(default=None, ge=1)

    output_dir: Path = Path("out")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept the standard logging level names only."""
        valid = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        level = v.upper()
        if level not in valid:
            raise ValueError(f"log_level must be one of {sorted(valid)}")
        return level

    def worker_count(self, jobs: Optional[int] = None) -> int:
        """Number of workers for a batch of ``jobs`` independent runs.

        Args:
            jobs: Number of jobs in the batch (caps the pool further when given)

        Returns:
            int: At least 1, at most ``threads`` (or the CPU count when unset)
        """
        cap = self.threads or os.cpu_count() or 1
        if jobs is not None:
            cap = min(cap, max(jobs, 1))
        return max(cap, 1)


# Global settings instance (singleton pattern)
settings = Settings()
