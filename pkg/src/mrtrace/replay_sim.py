"""Discrete-event replay of a synthetic workload on a slot-based cluster.

Time is simulated in integer microseconds so event ordering is exact.
Task durations are uniform within a job (total task-seconds divided by
task count), the simulator's central approximation, and reduces start
only after all of a job's maps finish.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right, insort
from dataclasses import dataclass

import numpy as np

from .errors import UnsortedWorkload
from .synthesis import SyntheticWorkload
from .temporal import TimeSeries

US = 1_000_000

_MAP = 0
_REDUCE = 1


@dataclass(frozen=True)
class SimConfig:
    nodes: int
    map_slots_per_node: int = 2
    reduce_slots_per_node: int = 2
    scheduler: str = "fifo"  # fifo | fair

    def __post_init__(self):
        if min(self.nodes, self.map_slots_per_node, self.reduce_slots_per_node) < 1:
            raise ValueError("nodes and per-node slot counts must be positive")
        if self.scheduler not in ("fifo", "fair"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")


@dataclass
class JobTiming:
    submit: float
    first_task_start: float
    completion: float


@dataclass
class SimResult:
    job_timings: list[JobTiming]
    makespan: float
    busy_map_slot_seconds: float
    busy_reduce_slot_seconds: float
    task_intervals: list[tuple[int, int, int]]  # (start_us, end_us, kind)
    total_slots: int


class _Job:
    __slots__ = (
        "idx", "submit_us", "map_dur_us", "reduce_dur_us",
        "maps_to_dispatch", "maps_unfinished", "maps_dispatched",
        "reduces_to_dispatch", "reduces_unfinished", "reduces_dispatched",
        "first_start_us", "completion_us",
    )

    def __init__(self, idx, submit_us, map_tasks, reduce_tasks, map_ts, reduce_ts):
        self.idx = idx
        self.submit_us = submit_us
        self.map_dur_us = round(map_ts / map_tasks * US) if map_tasks else 0
        self.reduce_dur_us = round(reduce_ts / reduce_tasks * US) if reduce_tasks else 0
        self.maps_to_dispatch = map_tasks
        self.maps_unfinished = map_tasks
        self.maps_dispatched = 0
        self.reduces_to_dispatch = reduce_tasks
        self.reduces_unfinished = reduce_tasks
        self.reduces_dispatched = 0
        self.first_start_us = None
        self.completion_us = None


class _RunQueue:
    """Job indices with dispatchable tasks, granted fifo or round-robin."""

    def __init__(self, scheduler: str):
        self.fair = scheduler == "fair"
        self.jobs: list[int] = []  # sorted
        self.cursor = -1  # last job granted (fair only)

    def add(self, idx: int):
        insort(self.jobs, idx)

    def remove(self, idx: int):
        pos = bisect_right(self.jobs, idx) - 1
        self.jobs.pop(pos)

    def pick(self) -> int:
        if not self.fair:
            return self.jobs[0]
        pos = bisect_right(self.jobs, self.cursor)
        if pos == len(self.jobs):
            pos = 0
        self.cursor = self.jobs[pos]
        return self.cursor


def simulate(workload: SyntheticWorkload, config: SimConfig) -> SimResult:
    """Run the workload to completion and report per-job times and slot usage."""
    offsets = [j.submit_offset for j in workload.jobs]
    if any(b < a for a, b in zip(offsets, offsets[1:])):
        raise UnsortedWorkload("jobs must be sorted by submit_offset")

    jobs = [
        _Job(i, j.submit_offset * US, j.map_tasks, j.reduce_tasks,
             j.map_task_seconds, j.reduce_task_seconds)
        for i, j in enumerate(workload.jobs)
    ]

    free = {
        _MAP: config.nodes * config.map_slots_per_node,
        _REDUCE: config.nodes * config.reduce_slots_per_node,
    }
    runnable = {_MAP: _RunQueue(config.scheduler), _REDUCE: _RunQueue(config.scheduler)}
    completions: list[tuple[int, int, int, int]] = []  # (end_us, job, kind, task#)
    intervals: list[tuple[int, int, int]] = []
    busy_us = {_MAP: 0, _REDUCE: 0}

    def job_done(job: _Job, t: int):
        job.completion_us = t
        if job.first_start_us is None:
            job.first_start_us = job.submit_us

    def dispatch(t: int):
        for kind in (_MAP, _REDUCE):
            queue = runnable[kind]
            while free[kind] > 0 and queue.jobs:
                job = jobs[queue.pick()]
                if kind == _MAP:
                    job.maps_to_dispatch -= 1
                    task_no = job.maps_dispatched
                    job.maps_dispatched += 1
                    left, dur = job.maps_to_dispatch, job.map_dur_us
                else:
                    job.reduces_to_dispatch -= 1
                    task_no = job.reduces_dispatched
                    job.reduces_dispatched += 1
                    left, dur = job.reduces_to_dispatch, job.reduce_dur_us
                if left == 0:
                    queue.remove(job.idx)
                if job.first_start_us is None:
                    job.first_start_us = t
                free[kind] -= 1
                end = t + dur
                heapq.heappush(completions, (end, job.idx, kind, task_no))
                intervals.append((t, end, kind))
                busy_us[kind] += dur

    arrival_i = 0
    n = len(jobs)
    while arrival_i < n or completions:
        t_arrival = jobs[arrival_i].submit_us if arrival_i < n else None
        t_completion = completions[0][0] if completions else None
        t = min(x for x in (t_arrival, t_completion) if x is not None)

        while completions and completions[0][0] == t:
            _, idx, kind, _ = heapq.heappop(completions)
            job = jobs[idx]
            free[kind] += 1
            if kind == _MAP:
                job.maps_unfinished -= 1
                if job.maps_unfinished == 0:
                    if job.reduces_to_dispatch > 0:
                        runnable[_REDUCE].add(idx)  # barrier lifts
                    elif job.reduces_unfinished == 0:
                        job_done(job, t)
            else:
                job.reduces_unfinished -= 1
                if job.reduces_unfinished == 0:
                    job_done(job, t)

        while arrival_i < n and jobs[arrival_i].submit_us == t:
            job = jobs[arrival_i]
            if job.maps_to_dispatch > 0:
                runnable[_MAP].add(job.idx)
            elif job.reduces_to_dispatch > 0:
                runnable[_REDUCE].add(job.idx)
            else:
                job_done(job, t)
            arrival_i += 1

        dispatch(t)

    timings = [
        JobTiming(
            submit=j.submit_us / US,
            first_task_start=j.first_start_us / US,
            completion=j.completion_us / US,
        )
        for j in jobs
    ]
    makespan = 0.0
    if jobs:
        makespan = (max(j.completion_us for j in jobs) - min(j.submit_us for j in jobs)) / US
    return SimResult(
        job_timings=timings,
        makespan=makespan,
        busy_map_slot_seconds=busy_us[_MAP] / US,
        busy_reduce_slot_seconds=busy_us[_REDUCE] / US,
        task_intervals=intervals,
        total_slots=config.nodes * (config.map_slots_per_node + config.reduce_slots_per_node),
    )


def sim_occupancy_series(result: SimResult, bucket_width: int = 3600) -> TimeSeries:
    """Average active slots per bucket from exact task intervals."""
    if bucket_width <= 0:
        raise ValueError("bucket_width must be positive")
    width_us = bucket_width * US
    end_us = max((e for _, e, _ in result.task_intervals), default=0)
    n = max(1, -(-end_us // width_us))
    acc_us = [0] * n
    for start, end, _ in result.task_intervals:
        if end == start:
            continue
        first = start // width_us
        last = (end - 1) // width_us
        for b in range(first, last + 1):
            lo = b * width_us
            acc_us[b] += min(end, lo + width_us) - max(start, lo)
    return TimeSeries(
        bucket_width=bucket_width,
        start=0,
        values=np.asarray(acc_us, dtype=np.float64) / width_us,
        dimension="occupancy_slots",
    )
