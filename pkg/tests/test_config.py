"""
Tests for process settings.
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from syzygy.config import Settings


class TestSettings:
    """Environment-driven settings."""

    def test_defaults(self, monkeypatch):
        for name in ("SYZYGY_LOG_LEVEL", "SYZYGY_THREADS", "SYZYGY_OUTPUT_DIR"):
            monkeypatch.delenv(name, raising=False)
        s = Settings(_env_file=None)
        assert s.log_level == "INFO"
        assert s.threads is None
        assert s.output_dir == Path("out")

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("SYZYGY_THREADS", "3")
        monkeypatch.setenv("SYZYGY_LOG_LEVEL", "debug")
        s = Settings(_env_file=None)
        assert s.threads == 3
        assert s.log_level == "DEBUG"

    def test_invalid_log_level(self, monkeypatch):
        monkeypatch.setenv("SYZYGY_LOG_LEVEL", "LOUD")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_threads_must_be_positive(self, monkeypatch):
        monkeypatch.setenv("SYZYGY_THREADS", "0")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_test_environment_loaded(self):
        from syzygy.config import settings

        assert settings.environment == "test"
        assert settings.threads == 2


class TestWorkerCount:
    """Worker pool sizing."""

    def test_capped_by_threads(self):
        s = Settings(_env_file=None, threads=4)
        assert s.worker_count() == 4
        assert s.worker_count(10) == 4

    def test_capped_by_jobs(self):
        s = Settings(_env_file=None, threads=8)
        assert s.worker_count(2) == 2

    def test_never_zero(self):
        s = Settings(_env_file=None, threads=1)
        assert s.worker_count(0) == 1
