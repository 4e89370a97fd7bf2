"""Line-delimited episode traces.

One JSON object per line, keys sorted, floats at full round-trip precision.
Appending is the only write mode, so a crash can cost at most the final
partial line; readers surface that as a warning, not an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import MalformedTrace, SchemaError

SCHEMA_VERSION = 1

RECORD_KINDS = ("world", "switch", "plan", "solve", "event")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    t: float  # simulation time [s]
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {self.kind!r}")
        if self.step < 0:
            raise ValueError("step index must be nonnegative")


def _encode(record: TraceRecord) -> str:
    return json.dumps(
        {
            "schema": SCHEMA_VERSION,
            "step": record.step,
            "t": record.t,
            "kind": record.kind,
            "payload": record.payload,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def _decode(line: str) -> TraceRecord:
    obj = json.loads(line)
    if obj.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unknown trace schema version {obj.get('schema')!r}")
    return TraceRecord(step=obj["step"], t=obj["t"], kind=obj["kind"], payload=obj["payload"])


class TraceWriter:
    """Append-only writer; call close() or use as a context manager."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def write(self, record: TraceRecord) -> None:
        self._fh.write(_encode(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_encode(record) + "\n")
    return path


def read_trace(path: str | Path) -> tuple[list[TraceRecord], list[str]]:
    """All complete records plus warnings (a truncated final line is tolerated)."""
    records: list[TraceRecord] = []
    warnings: list[str] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    # A well-formed file ends with a newline, leaving one empty tail entry.
    body, tail = lines[:-1], lines[-1]
    for lineno, line in enumerate(body, start=1):
        try:
            records.append(_decode(line))
        except SchemaError:
            raise
        except Exception as exc:
            raise MalformedTrace(f"{path}:{lineno}: {exc}") from exc
    if tail:
        try:
            records.append(_decode(tail))
        except SchemaError:
            raise
        except Exception:
            warnings.append(f"truncated final line dropped ({len(tail)} bytes)")
    return records, warnings


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    records: int = 0


def validate_trace(path: str | Path) -> ValidationReport:
    """Check schema version and non-decreasing step indexes, line by line."""
    errors: list[str] = []
    warnings: list[str] = []
    count = 0
    last_step = -1
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    body, tail = lines[:-1], lines[-1]
    for lineno, line in enumerate(body, start=1):
        try:
            record = _decode(line)
        except Exception as exc:
            errors.append(f"line {lineno}: {exc}")
            continue
        if record.step < last_step:
            errors.append(
                f"line {lineno}: step {record.step} after step {last_step} (not monotone)"
            )
        last_step = max(last_step, record.step)
        count += 1
    if tail:
        warnings.append(f"line {len(body) + 1}: truncated final line")
    return ValidationReport(
        ok=not errors, errors=tuple(errors), warnings=tuple(warnings), records=count
    )


def trace_path(out_dir: str | Path, pipeline: str, seed: int) -> Path:
    """Canonical layout: <run>/<pipeline>/<seed>.trace"""
    return Path(out_dir) / pipeline / f"{seed}.trace"
