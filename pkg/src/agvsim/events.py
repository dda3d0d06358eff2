"""Deterministic discrete-event queue.

Events are popped in (time, id) order, so two simultaneous events resolve in
scheduling order and replays are bitwise reproducible.  The queue owns the
simulation clock: popping an event advances it.  Single-threaded by design;
run independent simulation instances for parallelism.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class EventKind(str, Enum):
    PART_RELEASED = "PartReleased"
    DRIVE_ARRIVED = "DriveArrived"
    TRANSFER_DONE = "TransferDone"
    PROCESSING_DONE = "ProcessingDone"
    SOURCE_CLOCK_TICK = "SourceClockTick"


@dataclass(frozen=True)
class Event:
    id: int
    time: float
    kind: EventKind
    payload: dict = field(default_factory=dict)


class EventQueue:
    def __init__(self) -> None:
        self.clock = 0.0
        self._heap: list[tuple[float, int, Event]] = []
        self._next_id = 0
        self.popped = 0

    def schedule(self, at: float, kind: EventKind, payload: Optional[dict] = None) -> int:
        if at < self.clock:
            raise ValueError(
                f"cannot schedule {kind} at t={at} before clock t={self.clock}"
            )
        event = Event(self._next_id, at, kind, payload or {})
        heapq.heappush(self._heap, (at, event.id, event))
        self._next_id += 1
        return event.id

    def next_event(self) -> Optional[Event]:
        if not self._heap:
            return None
        _, _, event = heapq.heappop(self._heap)
        self.clock = event.time
        self.popped += 1
        return event

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    @property
    def scheduled(self) -> int:
        return self._next_id

    def __len__(self) -> int:
        return len(self._heap)
