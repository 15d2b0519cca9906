"""Discrete-event core: simulation clock, cancellable event calendar, and
capacity pools with multi-unit requests and deadline-based abandonment.

Everything here is deterministic given the sequence of calls made against it;
randomness lives entirely in the callers (see :mod:`sheltersim.streams`).
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable


class EventHandle:
    """Ticket for a scheduled callback. ``cancel()`` keeps it from firing."""

    __slots__ = ("time", "seq", "fn", "args", "cancelled")

    def __init__(self, time: float, seq: int, fn: Callable, args: tuple):
        self.time = time
        self.seq = seq
        self.fn = fn
        self.args = args
        self.cancelled = False

    def cancel(self) -> None:
        # Idempotent; the heap entry is skipped lazily when popped.
        self.cancelled = True


class Simulator:
    """Event calendar plus clock.

    Events fire in (time, insertion order) order, so two events scheduled for
    the same instant fire in the order they were scheduled. That total order
    is what makes whole runs reproducible.
    """

    def __init__(self):
        self.now = 0.0
        self._heap: list[tuple[float, int, EventHandle]] = []
        self._seq = 0

    def schedule(self, time: float, fn: Callable, *args) -> EventHandle:
        """Schedule ``fn(*args)`` at ``time``. Scheduling in the past is a bug."""
        if time < self.now:
            raise ValueError(
                f"cannot schedule at t={time} before current clock t={self.now}"
            )
        handle = EventHandle(time, self._seq, fn, args)
        self._seq += 1
        heapq.heappush(self._heap, (time, handle.seq, handle))
        return handle

    def run_until(self, t_end: float) -> float:
        """Process every event with time <= t_end; leave the clock at t_end."""
        if t_end < self.now:
            raise ValueError(f"t_end={t_end} is before current clock t={self.now}")
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            time, _seq, handle = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self.now = time
            handle.fn(*handle.args)
        self.now = t_end
        return self.now


class PendingRequest:
    """A queued multi-unit request with an abandonment deadline."""

    __slots__ = (
        "entity_id", "units", "enqueue_time", "renege_deadline",
        "on_grant", "on_renege", "timer", "counted",
    )

    def __init__(self, entity_id, units, enqueue_time, renege_deadline,
                 on_grant, on_renege):
        self.entity_id = entity_id
        self.units = units
        self.enqueue_time = enqueue_time
        self.renege_deadline = renege_deadline
        self.on_grant = on_grant
        self.on_renege = on_renege
        self.timer: EventHandle | None = None
        self.counted = True


@dataclass
class ResourceStats:
    """Counters accumulated since the last statistics reset."""

    request_count: int = 0
    served_waits: list[float] = field(default_factory=list)
    renege_count: int = 0
    busy_time_integral: float = 0.0  # unit-days


class Resource:
    """A pool of identical units with a FIFO queue of impatient requests.

    Grants are strict FIFO: a request that fits behind a head that does not
    fit keeps waiting. An ungranted request leaves the queue at exactly
    ``enqueue_time + patience``. Holdings are tracked per entity so a later
    release can be checked against what is actually held.
    """

    __slots__ = ("sim", "name", "capacity", "busy", "queue", "stats",
                 "_held", "_last_ts", "_window_start")

    def __init__(self, sim: Simulator, name: str, capacity: int):
        if capacity < 0 or int(capacity) != capacity:
            raise ValueError(f"{name}: capacity must be a non-negative integer")
        self.sim = sim
        self.name = name
        self.capacity = int(capacity)
        self.busy = 0
        self.queue: deque[PendingRequest] = deque()
        self.stats = ResourceStats()
        self._held: dict = {}
        self._last_ts = sim.now
        self._window_start = sim.now

    # -- statistics window ------------------------------------------------

    def _advance_integral(self) -> None:
        now = self.sim.now
        if now > self._last_ts:
            self.stats.busy_time_integral += self.busy * (now - self._last_ts)
            self._last_ts = now

    def reset_statistics(self) -> None:
        """Zero all counters and restart busy-time integration at the current
        clock. Requests already in the queue stop counting toward totals."""
        self._advance_integral()
        self.stats = ResourceStats()
        self._last_ts = self.sim.now
        self._window_start = self.sim.now
        for req in self.queue:
            req.counted = False

    def utilization(self, window_start: float, window_end: float) -> float:
        """Time-averaged fraction of units held over the window.

        The busy-time integral is anchored at the last statistics reset, so
        ``window_start`` must equal that instant and ``window_end`` must not
        be in the future.
        """
        if self.capacity == 0:
            raise ValueError(f"{self.name}: utilization undefined for zero capacity")
        if window_end <= window_start:
            raise ValueError("window_end must be greater than window_start")
        if window_start != self._window_start:
            raise ValueError(
                f"{self.name}: busy-time integral starts at t={self._window_start}, "
                f"not t={window_start}"
            )
        if window_end > self.sim.now:
            raise ValueError("window_end is beyond the executed run")
        self._advance_integral()
        return self.stats.busy_time_integral / (self.capacity * (window_end - window_start))

    # -- holdings ----------------------------------------------------------

    def held_by(self, entity_id) -> int:
        return self._held.get(entity_id, 0)

    def still_queued_counted(self) -> int:
        return sum(1 for req in self.queue if req.counted)

    # -- request / release ---------------------------------------------------

    def request(self, entity_id, units: int, patience: float,
                on_grant: Callable[[float], None],
                on_renege: Callable[[], None]) -> None:
        """Ask for ``units`` units, abandoning after ``patience`` days.

        Immediate grant (wait 0) happens only when the queue is empty and the
        units fit; otherwise the request queues behind everyone else. Exactly
        one of the callbacks fires, possibly synchronously.
        """
        if units < 1:
            raise ValueError(f"{self.name}: requested units must be >= 1, got {units}")
        if units > self.capacity:
            raise ValueError(
                f"{self.name}: request for {units} units can never be satisfied "
                f"(capacity {self.capacity})"
            )
        self.stats.request_count += 1
        if not self.queue and self.busy + units <= self.capacity:
            self._seize(entity_id, units)
            self.stats.served_waits.append(0.0)
            on_grant(0.0)
            return
        now = self.sim.now
        req = PendingRequest(entity_id, units, now, now + patience, on_grant, on_renege)
        req.timer = self.sim.schedule(req.renege_deadline, self._renege, req)
        self.queue.append(req)

    def release(self, entity_id, units: int) -> None:
        """Return units to the pool and re-examine the queue head."""
        held = self._held.get(entity_id, 0)
        if units > held:
            raise ValueError(
                f"{self.name}: entity {entity_id} holds {held} units, cannot release {units}"
            )
        self._advance_integral()
        self.busy -= units
        if held == units:
            del self._held[entity_id]
        else:
            self._held[entity_id] = held - units
        self._dispatch()

    def _seize(self, entity_id, units: int) -> None:
        self._advance_integral()
        self.busy += units
        self._held[entity_id] = self._held.get(entity_id, 0) + units

    def _dispatch(self) -> None:
        # Grant from the head while it fits; never look past a blocked head.
        queue = self.queue
        while queue and self.busy + queue[0].units <= self.capacity:
            req = queue.popleft()
            req.timer.cancel()
            self._seize(req.entity_id, req.units)
            wait = self.sim.now - req.enqueue_time
            if req.counted:
                self.stats.served_waits.append(wait)
            req.on_grant(wait)

    def _renege(self, req: PendingRequest) -> None:
        self.queue.remove(req)
        if req.counted:
            self.stats.renege_count += 1
        req.on_renege()
        # Removing a blocked head can unblock smaller requests behind it.
        self._dispatch()
