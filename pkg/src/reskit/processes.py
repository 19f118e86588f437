"""Cumulative outage, restore and performance step functions of an event."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import ResilienceEvent


class ProcessKind(str, enum.Enum):
    OUTAGE = "OUTAGE"
    RESTORE = "RESTORE"
    PERFORMANCE = "PERFORMANCE"


@dataclass(frozen=True)
class StepProcess:
    """Right-continuous step function given by its jump points.

    ``values[i]`` holds on ``[times[i], times[i+1])``; the function is 0
    before ``times[0]``. Times are minutes since the event origin.
    """

    kind: ProcessKind
    times: tuple
    values: tuple[int, ...]
    n: int

    @property
    def breakpoints(self) -> list[tuple]:
        return list(zip(self.times, self.values))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.times, dtype=float), t_arr, side="right") - 1
        vals = np.concatenate([[0], np.asarray(self.values, dtype=int)])
        out = vals[idx + 1]
        return int(out) if out.ndim == 0 else out

    def jump_sizes(self) -> list[tuple]:
        prev = 0
        jumps = []
        for t, v in self.breakpoints:
            jumps.append((t, v - prev))
            prev = v
        return jumps


def _counting_process(kind: ProcessKind, times) -> StepProcess:
    uniq, counts = np.unique(np.asarray(times), return_counts=True)
    cum = np.cumsum(counts)
    return StepProcess(kind, tuple(uniq.tolist()), tuple(int(c) for c in cum), len(times))


def outage_process(event: ResilienceEvent) -> StepProcess:
    """O(t): number of outages at or before t."""
    if event.n < 1:
        raise ValueError("event has no outages")
    return _counting_process(ProcessKind.OUTAGE, event.outage_times)


def restore_process(event: ResilienceEvent) -> StepProcess:
    """R(t): number of restores at or before t."""
    if event.n < 1:
        raise ValueError("event has no restores")
    return _counting_process(ProcessKind.RESTORE, event.restore_times)


def performance_curve(event: ResilienceEvent) -> StepProcess:
    """P(t) = R(t) - O(t), minus the number of unrestored outages."""
    outage = outage_process(event)
    restore = restore_process(event)
    times = np.union1d(np.asarray(outage.times), np.asarray(restore.times))
    values = np.asarray(restore(times)) - np.asarray(outage(times))
    return StepProcess(
        ProcessKind.PERFORMANCE, tuple(times.tolist()), tuple(int(v) for v in values), event.n
    )


def decompose(performance: StepProcess) -> tuple[list, list]:
    """Recover the outage and restore time multisets from P(t).

    Only valid when no outage and restore share a time exactly; a shared
    time leaves just the net jump.
    """
    outages, restores = [], []
    for t, jump in performance.jump_sizes():
        if jump < 0:
            outages.extend([t] * -jump)
        elif jump > 0:
            restores.extend([t] * jump)
    return outages, restores


def write_process_csv(process: StepProcess, path: str | Path) -> None:
    """Plot data as ``time_hours,value`` rows: a start row at the first jump
    with value 0, then one row per breakpoint."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_hours", "value"])
        if process.times:
            writer.writerow([f"{process.times[0] / 60:.4f}", 0])
        for t, v in process.breakpoints:
            writer.writerow([f"{t / 60:.4f}", v])
