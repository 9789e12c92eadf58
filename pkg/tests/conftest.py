"""Pytest configuration for Syzygy tests.

This module configures pytest to:
1. Load .env.test before the package reads its settings
2. Provide shared mass triples, seeded generators and a converged figure eight
3. Capture run events for assertions
"""

import json
import logging
from io import StringIO
from pathlib import Path

import numpy as np
import pytest
from dotenv import load_dotenv


def pytest_configure(config):
    """Load .env.test before any syzygy module builds its settings singleton."""
    project_root = Path(__file__).parent.parent
    env_test_path = project_root / ".env.test"

    if env_test_path.exists():
        load_dotenv(env_test_path, override=True)


@pytest.fixture
def equal_masses():
    from syzygy.triangle_core import MassTriple

    return MassTriple.equal()


@pytest.fixture
def unequal_masses():
    from syzygy.triangle_core import MassTriple

    return MassTriple(1.0, 2.0, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def eight():
    """Converged figure-eight loop for equal masses (shared, it is expensive)."""
    from syzygy.varfinder import find_eight

    loop, report = find_eight()
    return loop, report


@pytest.fixture(scope="session")
def eight_orbit(eight):
    """Refined initial state of the eight, integrated over two periods."""
    from syzygy.nbody_dynamics import integrate
    from syzygy.runs import eight_phase
    from syzygy.schemas import IntegratorConfig
    from syzygy.varfinder import refine_to_orbit

    loop, _ = eight
    refined = refine_to_orbit(loop.mass_triple, loop, phase=eight_phase(loop))
    cfg = IntegratorConfig(t_end=2.0 * refined.period, rel_tol=1e-12, abs_tol=1e-13)
    return refined, integrate(loop.mass_triple, refined.state, cfg)


@pytest.fixture
def capture_run_events(monkeypatch):
    """Capture run events; yields a callable returning the parsed events."""
    from syzygy.config import settings

    monkeypatch.setattr(settings, "log_level", "INFO")
    log_capture = StringIO()
    handler = logging.StreamHandler(log_capture)
    handler.setFormatter(logging.Formatter("%(message)s"))

    logger = logging.getLogger("syzygy.run")
    saved = (logger.handlers, logger.level)
    logger.handlers = [handler]
    logger.setLevel(logging.INFO)

    def events():
        lines = [line for line in log_capture.getvalue().splitlines() if "RUN: " in line]
        return [json.loads(line.split("RUN: ", 1)[1]) for line in lines]

    yield events

    logger.handlers, level = saved
    logger.setLevel(level)
