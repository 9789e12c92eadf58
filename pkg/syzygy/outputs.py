"""Output sinks for CSV and JSON artifacts.

Numeric bodies are formatted with ``repr`` so identical runs produce
byte-identical files.
"""

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from syzygy.run_log import get_run_logger

logger = get_run_logger("outputs")


def format_value(value: Any) -> str:
    """Format one CSV cell."""
    if isinstance(value, (np.generic, np.ndarray)) and np.ndim(value) == 0:
        value = value.item()
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render a header and rows as CSV text with exact float formatting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    """Render a payload as indented JSON with sorted keys."""
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class OutputSink(Protocol):
    """Sink contract for named text artifacts."""

    def write_text(self, name: str, text: str) -> None:
        """Writes one artifact, replacing any previous content."""


class DirectorySink:
    """Writes artifacts into a directory; each file appears atomically."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    def write_text(self, name: str, text: str) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        target = self.root / name
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.root)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.log_output_written(str(target), len(text.encode("utf-8")))


class InMemorySink:
    """In-memory sink for tests."""

    def __init__(self) -> None:
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> None:
        self.files[name] = text


def write_csv(sink: OutputSink, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]):
    sink.write_text(name, render_csv(header, rows))


def write_json(sink: OutputSink, name: str, payload: Any) -> None:
    sink.write_text(name, render_json(payload))
