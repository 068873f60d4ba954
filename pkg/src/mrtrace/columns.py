"""Per-trace numpy column extraction, computed once and cached weakly.

Analyses over large traces are vectorized against these columns rather
than re-walking the record list. Missing numeric values are NaN; path
digests keep a separate presence mask because uint64 has no NaN.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from operator import attrgetter

import numpy as np

from .trace import Trace

_NUMERIC = (
    "submit_time",
    "duration",
    "input_bytes",
    "shuffle_bytes",
    "output_bytes",
    "map_task_seconds",
    "reduce_task_seconds",
    "map_tasks",
    "reduce_tasks",
)

_GETTER = attrgetter(*_NUMERIC, "input_path_hash", "output_path_hash")


@dataclass
class TraceColumns:
    submit_time: np.ndarray  # int64, always present
    duration: np.ndarray  # float64, NaN = missing (same for the rest)
    input_bytes: np.ndarray
    shuffle_bytes: np.ndarray
    output_bytes: np.ndarray
    map_task_seconds: np.ndarray
    reduce_task_seconds: np.ndarray
    map_tasks: np.ndarray
    reduce_tasks: np.ndarray
    input_path_hash: np.ndarray  # uint64
    input_hash_present: np.ndarray  # bool
    output_path_hash: np.ndarray
    output_hash_present: np.ndarray

    def hash_column(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        if side == "input":
            return self.input_path_hash, self.input_hash_present
        if side == "output":
            return self.output_path_hash, self.output_hash_present
        raise ValueError(f"side must be 'input' or 'output', got {side!r}")

    def bytes_column(self, side_or_dim: str) -> np.ndarray:
        try:
            return getattr(self, f"{side_or_dim}_bytes")
        except AttributeError:
            raise ValueError(f"unknown byte dimension {side_or_dim!r}")


_cache: "weakref.WeakKeyDictionary[Trace, TraceColumns]" = weakref.WeakKeyDictionary()


def columns(trace: Trace) -> TraceColumns:
    cols = _cache.get(trace)
    if cols is None:
        cols = _extract(trace)
        _cache[trace] = cols
    return cols


def _extract(trace: Trace) -> TraceColumns:
    n = len(trace.records)
    raw = [_GETTER(r) for r in trace.records]
    cols_t = list(zip(*raw)) if raw else [()] * 11

    submit = np.asarray(cols_t[0], dtype=np.int64)
    # np.asarray turns None into NaN during float conversion.
    numeric = {
        name: np.asarray(cols_t[i], dtype=np.float64)
        for i, name in enumerate(_NUMERIC[1:], start=1)
    }

    in_hash_raw, out_hash_raw = cols_t[9], cols_t[10]
    in_present = np.asarray([v is not None for v in in_hash_raw], dtype=bool)
    out_present = np.asarray([v is not None for v in out_hash_raw], dtype=bool)
    in_hash = np.asarray([v or 0 for v in in_hash_raw], dtype=np.uint64)
    out_hash = np.asarray([v or 0 for v in out_hash_raw], dtype=np.uint64)

    assert len(submit) == n
    return TraceColumns(
        submit_time=submit,
        input_path_hash=in_hash,
        input_hash_present=in_present,
        output_path_hash=out_hash,
        output_hash_present=out_present,
        **numeric,
    )
