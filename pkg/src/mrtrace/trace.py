"""Canonical trace data model: job records, parsing, validation, serialization.

A trace file is JSON Lines (one job per line) or CSV with a header row.
Only job_id and submit_time are required; every other dimension may be
missing and is then left as None, never zero-filled.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    EmptyPath,
    EmptyTrace,
    MalformedRecord,
    MissingRequiredField,
)

# Canonical on-disk column order.
FIELD_NAMES = (
    "job_id",
    "name",
    "submit_time",
    "duration",
    "input_bytes",
    "shuffle_bytes",
    "output_bytes",
    "map_task_seconds",
    "reduce_task_seconds",
    "map_tasks",
    "reduce_tasks",
    "input_path_hash",
    "output_path_hash",
)

OPTIONAL_FIELDS = tuple(f for f in FIELD_NAMES if f not in ("job_id", "submit_time"))

# FNV-1a with the standard 64-bit offset basis; the basis acts as a fixed
# seed so digests are reproducible across runs and recorded in reports.
HASH_ALGORITHM = "fnv1a64"
FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True, slots=True)
class JobRecord:
    """Per-job summary: identifiers, sizes, durations, task times, path digests."""

    job_id: int
    submit_time: int
    name: Optional[str] = None
    duration: Optional[int] = None
    input_bytes: Optional[int] = None
    shuffle_bytes: Optional[int] = None
    output_bytes: Optional[int] = None
    map_task_seconds: Optional[float] = None
    reduce_task_seconds: Optional[float] = None
    map_tasks: Optional[int] = None
    reduce_tasks: Optional[int] = None
    input_path_hash: Optional[int] = None
    output_path_hash: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Trace:
    """Ordered job records plus cluster metadata.

    Immutable after construction; identity equality so instances can key
    weak caches of derived columns.
    """

    label: str
    machine_count: int
    records: list[JobRecord]
    span: tuple[int, int]


@dataclass
class ValidationReport:
    record_count: int
    missing_field_counts: dict[str, int]
    anomalies: list[tuple[int, str]] = field(default_factory=list)


def hash_path(path: str) -> int:
    """FNV-1a 64-bit digest of a file path; stable across runs."""
    if not path:
        raise EmptyPath("cannot hash an empty path")
    h = FNV64_OFFSET_BASIS
    for b in path.encode("utf-8"):
        h = ((h ^ b) * FNV64_PRIME) & _U64
    return h


_KEY_SET = frozenset(FIELD_NAMES)


def _coerce_nonneg(obj, key, line_no, as_int):
    # type() instead of isinstance keeps bools out and is faster on the
    # million-record path; `not v >= 0` also rejects NaN.
    v = obj.get(key)
    if v is None:
        return None
    t = type(v)
    if (t is not int and t is not float) or not v >= 0:
        raise MalformedRecord(line_no, f"{key} must be a non-negative number, got {v!r}")
    return int(v) if as_int else float(v)


def _record_from_obj(obj: dict, line_no: int) -> JobRecord:
    """Build a JobRecord from a decoded jsonl object, checking types and signs."""
    if not obj.keys() <= _KEY_SET:
        unknown = sorted(obj.keys() - _KEY_SET)
        raise MalformedRecord(line_no, f"unknown field(s) {unknown}")

    job_id = obj.get("job_id")
    if job_id is None:
        raise MissingRequiredField(line_no, "job_id")
    if type(job_id) is not int or job_id < 0:
        raise MalformedRecord(line_no, f"job_id must be a non-negative integer, got {job_id!r}")

    submit = obj.get("submit_time")
    if submit is None:
        raise MissingRequiredField(line_no, "submit_time")
    t = type(submit)
    if t is not int:
        if t is not float:
            raise MalformedRecord(line_no, f"submit_time must be a number, got {submit!r}")
        submit = int(submit)

    name = obj.get("name")
    if name is not None and type(name) is not str:
        raise MalformedRecord(line_no, f"name must be a string, got {name!r}")

    for key in ("input_path_hash", "output_path_hash"):
        v = obj.get(key)
        if v is not None and (type(v) is not int or not 0 <= v <= _U64):
            raise MalformedRecord(line_no, f"{key} must be a 64-bit unsigned integer, got {v!r}")

    return JobRecord(
        job_id,
        submit,
        name,
        _coerce_nonneg(obj, "duration", line_no, True),
        _coerce_nonneg(obj, "input_bytes", line_no, True),
        _coerce_nonneg(obj, "shuffle_bytes", line_no, True),
        _coerce_nonneg(obj, "output_bytes", line_no, True),
        _coerce_nonneg(obj, "map_task_seconds", line_no, False),
        _coerce_nonneg(obj, "reduce_task_seconds", line_no, False),
        _coerce_nonneg(obj, "map_tasks", line_no, True),
        _coerce_nonneg(obj, "reduce_tasks", line_no, True),
        obj.get("input_path_hash"),
        obj.get("output_path_hash"),
    )


def _iter_jsonl(lines: Iterable[str]):
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise MalformedRecord(line_no, "line is not a JSON object")
        yield _record_from_obj(obj, line_no)


def _iter_csv(lines: Iterable[str]):
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        return
    header = [h.strip() for h in header]
    unknown = [h for h in header if h not in _KEY_SET]
    if unknown:
        raise MalformedRecord(1, f"unknown column(s) {unknown}")
    for line_no, row in enumerate(reader, start=2):
        if not row or all(cell == "" for cell in row):
            continue
        obj: dict[str, object] = {}
        for col, cell in zip(header, row):
            cell = cell.strip()
            if cell == "":
                continue  # empty cell = missing
            if col == "name":
                obj[col] = cell
            else:
                try:
                    obj[col] = float(cell) if "." in cell or "e" in cell or "E" in cell else int(cell)
                except ValueError:
                    raise MalformedRecord(line_no, f"non-numeric value {cell!r} in column {col}")
        yield _record_from_obj(obj, line_no)


def _open_lines(source, fmt: str):
    """Yield text lines from a path, bytes, or file object."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="" if fmt == "csv" else None)
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"unsupported trace source {type(source)!r}")


def parse_trace(
    source,
    fmt: str = "jsonl",
    *,
    label: str = "trace",
    machine_count: int = 1,
    span: Optional[tuple[int, int]] = None,
) -> Trace:
    """Parse a trace file into an immutable Trace.

    source may be a path, bytes, or an open file. Records are sorted by
    submit_time (stable, so ties keep source order). If span is not given
    it is derived from the min/max submit times.
    """
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown trace format {fmt!r}")
    if machine_count < 1:
        raise ValueError("machine_count must be positive")

    fh = _open_lines(source, fmt)
    try:
        it = _iter_jsonl(fh) if fmt == "jsonl" else _iter_csv(fh)
        records = list(it)
    finally:
        fh.close()

    if not records:
        raise EmptyTrace("trace contains no records")

    records.sort(key=lambda r: r.submit_time)
    lo, hi = records[0].submit_time, records[-1].submit_time
    if span is None:
        span = (lo, hi)
    return Trace(label=label, machine_count=machine_count, records=records, span=span)


def serialize_trace(trace: Trace, dest) -> None:
    """Write a trace as canonical jsonl; missing fields are omitted keys."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8") if own else dest
    try:
        for r in trace.records:
            obj = {}
            for key in FIELD_NAMES:
                v = getattr(r, key)
                if v is not None:
                    obj[key] = v
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")
    finally:
        if own:
            fh.close()


def validate(trace: Trace) -> ValidationReport:
    """Report per-field missing counts and invariant violations; pure, never mutates."""
    missing = {name: 0 for name in OPTIONAL_FIELDS}
    anomalies: list[tuple[int, str]] = []
    seen_ids: set[int] = set()
    prev_submit = None
    lo, hi = trace.span

    for r in trace.records:
        for name in OPTIONAL_FIELDS:
            if getattr(r, name) is None:
                missing[name] += 1

        if r.job_id in seen_ids:
            anomalies.append((r.job_id, "duplicate job_id"))
        else:
            seen_ids.add(r.job_id)

        if prev_submit is not None and r.submit_time < prev_submit:
            anomalies.append((r.job_id, "records not sorted by submit_time"))
        prev_submit = r.submit_time
        if not lo <= r.submit_time <= hi:
            anomalies.append((r.job_id, f"submit_time {r.submit_time} outside span {trace.span}"))

        if r.duration is not None and r.duration < 0:
            anomalies.append((r.job_id, "negative duration"))
        for name in ("input_bytes", "shuffle_bytes", "output_bytes",
                     "map_task_seconds", "reduce_task_seconds", "map_tasks", "reduce_tasks"):
            v = getattr(r, name)
            if v is not None and v < 0:
                anomalies.append((r.job_id, f"negative {name}"))

        if r.map_tasks == 0 and r.map_task_seconds:
            anomalies.append((r.job_id, "map_tasks=0 but map_task_seconds>0"))
        if r.reduce_tasks == 0 and r.reduce_task_seconds:
            anomalies.append((r.job_id, "reduce_tasks=0 but reduce_task_seconds>0"))
        if r.reduce_tasks == 0 and r.shuffle_bytes:
            anomalies.append((r.job_id, "map-only job (reduce_tasks=0) but shuffle_bytes>0"))

    return ValidationReport(
        record_count=len(trace.records),
        missing_field_counts=missing,
        anomalies=anomalies,
    )
