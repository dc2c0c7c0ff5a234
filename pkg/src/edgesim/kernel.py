"""Deterministic discrete-event kernel.

Events are ordered by ``(fire_at, sequence)``; the sequence number is handed
out at scheduling time, so simultaneous events fire in FIFO order.
"""

from __future__ import annotations

import heapq
import logging
from enum import Enum
from typing import Any, Callable, Dict, List, NamedTuple, Optional

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    CONNECT_ACK = "connect-ack"
    GENERATE_DATA = "generate-data"
    EDGELET_ARRIVAL = "edgelet-arrival"
    PROCESSING_COMPLETE = "processing-complete"
    LOCATION_UPDATE = "location-update"
    BATTERY_UPDATE = "battery-update"
    RELAY_DELIVERY = "relay-delivery"
    TERMINATE = "terminate"


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Event(NamedTuple):
    # field order doubles as heap order; sequence is unique so comparison
    # never reaches target/payload
    fire_at: float
    sequence: int
    target: str
    kind: EventKind
    payload: Any = None


Handler = Callable[[Event], None]


class Kernel:
    """Clock, event queue and dispatch table.

    Handlers are registered per entity id. An event whose target has no
    handler is dispatched to the kernel-wide fallback handler, if any.
    """

    def __init__(self, trace: bool = False) -> None:
        self._queue: List[Event] = []
        self._seq = 0
        self._now = 0.0
        self._handlers: Dict[str, Handler] = {}
        self._fallback: Optional[Handler] = None
        self._stopped = False
        self.dispatched = 0
        self.stop_reason: Optional[str] = None
        self.trace: Optional[List[Event]] = [] if trace else None

    # -- registration -----------------------------------------------------
    def register(self, entity_id: str, handler: Handler) -> None:
        if entity_id in self._handlers:
            raise ValueError(f"entity {entity_id!r} already registered")
        self._handlers[entity_id] = handler

    def set_fallback(self, handler: Handler) -> None:
        self._fallback = handler

    @property
    def entities(self) -> List[str]:
        return list(self._handlers)

    # -- clock / queue ----------------------------------------------------
    def now(self) -> float:
        return self._now

    def schedule(self, fire_at: float, target: str, kind: EventKind, payload: Any = None) -> int:
        if fire_at < self._now:
            raise SchedulingError(
                f"cannot schedule {kind.value} for {target!r} at t={fire_at!r}; clock is {self._now!r}"
            )
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, Event(fire_at, seq, target, kind, payload))
        return seq

    def schedule_in(self, delay: float, target: str, kind: EventKind, payload: Any = None) -> int:
        if delay < 0:
            raise SchedulingError(f"negative delay {delay!r} for {kind.value}")
        return self.schedule(self._now + delay, target, kind, payload)

    def stop(self, reason: str) -> None:
        """Ask the run loop to return after the current dispatch."""
        if not self._stopped:
            self._stopped = True
            self.stop_reason = reason

    def pending(self) -> List[Event]:
        """Events still queued, in dispatch order."""
        return sorted(self._queue)

    def __len__(self) -> int:
        return len(self._queue)

    # -- run loop ---------------------------------------------------------
    def run(self, until: Optional[float] = None) -> float:
        """Dispatch events until the queue empties, ``until`` passes, or stop().

        Events with ``fire_at > until`` are left queued. Returns the clock.
        """
        queue = self._queue
        handlers = self._handlers
        fallback = self._fallback
        trace = self.trace
        pop = heapq.heappop
        self._stopped = False
        while queue and not self._stopped:
            if until is not None and queue[0][0] > until:
                self._now = max(self._now, until)
                self.stop_reason = "horizon"
                return self._now
            event = pop(queue)
            self._now = event.fire_at
            self.dispatched += 1
            if trace is not None:
                trace.append(event)
            handler = handlers.get(event.target, fallback)
            if handler is None:
                logger.debug("no handler for %s (%s); dropped", event.target, event.kind.value)
                continue
            handler(event)
        if not queue and self.stop_reason is None:
            self.stop_reason = "exhausted"
        return self._now
