"""Run measurements and their CSV serialization."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from statistics import fmean
from typing import Dict, List, Optional, Sequence

SUMMARY_FILE = "summary.csv"
LATENCY_FILE = "latencies.csv"
DEVICE_FILE = "devices.csv"
HANDOFF_FILE = "handoffs.csv"

LATENCY_COLUMNS = (
    "edgelet_id", "request_id", "source_iot", "delivering_edge",
    "created_at", "delivered_at", "latency", "execution_time", "relayed",
)
DEVICE_COLUMNS = (
    "device_id", "kind", "max_capacity", "final_level", "energy_consumed",
    "depleted_at", "battery_hours", "edgelets",
)
HANDOFF_COLUMNS = ("time", "device_id", "from_edge", "to_edge", "cause")


@dataclass
class ResponseRecord:
    edgelet_id: int
    request_id: int
    source_iot: str
    delivering_edge: str
    created_at: float
    delivered_at: float
    execution_time: float
    relayed: bool

    @property
    def latency(self) -> float:
        return self.delivered_at - self.created_at


@dataclass
class DeviceRecord:
    device_id: str
    kind: str  # "iot" or "edge"
    max_capacity: Optional[float]
    final_level: Optional[float]
    energy_consumed: float
    depleted_at: Optional[float]
    edgelets: int
    battery_hours: Optional[float] = None


@dataclass
class HandoffRecord:
    time: float
    device_id: str
    from_edge: str
    to_edge: str
    cause: str


@dataclass
class DrainRecord:
    """One battery debit: the formula inputs, the requested and the applied amount."""

    time: float
    device_id: str
    data_size: float
    shrink_factor: float
    drain_proc: float
    drain_comm: float
    coefficient: float
    requested: float
    applied: float
    level_after: float


@dataclass
class MetricsReport:
    scenario: str = "scenario"
    seed: int = 0
    termination: str = "exhausted"
    final_time: float = 0.0
    events: int = 0
    generated: int = 0
    delivered: int = 0
    discarded: int = 0
    undelivered: int = 0
    in_flight: int = 0
    handoffs: int = 0
    relays: int = 0
    connection_nacks: int = 0
    responses: List[ResponseRecord] = field(default_factory=list)
    devices: List[DeviceRecord] = field(default_factory=list)
    handoff_log: List[HandoffRecord] = field(default_factory=list)
    # kept in memory only; not part of the byte-stable files
    drains: List[DrainRecord] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def mean_latency(self) -> Optional[float]:
        return fmean(r.latency for r in self.responses) if self.responses else None

    @property
    def mean_execution_time(self) -> Optional[float]:
        return fmean(r.execution_time for r in self.responses) if self.responses else None

    def _edges(self) -> List[DeviceRecord]:
        return [d for d in self.devices if d.kind == "edge"]

    @property
    def total_edge_energy(self) -> float:
        return sum(d.energy_consumed for d in self._edges())

    @property
    def mean_edge_energy(self) -> Optional[float]:
        edges = self._edges()
        return self.total_edge_energy / len(edges) if edges else None

    @property
    def min_edge_battery_hours(self) -> Optional[float]:
        hours = [d.battery_hours for d in self._edges() if d.battery_hours is not None]
        return min(hours) if hours else None

    @property
    def mean_iot_battery_hours(self) -> Optional[float]:
        hours = [d.battery_hours for d in self.devices if d.kind == "iot" and d.battery_hours is not None]
        return fmean(hours) if hours else None

    def device(self, device_id: str) -> DeviceRecord:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    def summary(self) -> Dict[str, object]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "termination": self.termination,
            "final_time": self.final_time,
            "events": self.events,
            "generated": self.generated,
            "delivered": self.delivered,
            "discarded": self.discarded,
            "undelivered": self.undelivered,
            "in_flight": self.in_flight,
            "handoffs": self.handoffs,
            "relays": self.relays,
            "connection_nacks": self.connection_nacks,
            "responses": len(self.responses),
            "mean_latency": self.mean_latency,
            "mean_execution_time": self.mean_execution_time,
            "total_edge_energy": self.total_edge_energy,
            "mean_edge_energy": self.mean_edge_energy,
            "min_edge_battery_hours": self.min_edge_battery_hours,
            "mean_iot_battery_hours": self.mean_iot_battery_hours,
        }


def fmt(value: object) -> str:
    """Cell formatting shared by every report table."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _write_rows(path: str, header: Sequence[str], rows: List[Sequence[object]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc.strerror or exc}") from exc


def write_report(r: MetricsReport, directory: str) -> List[str]:
    """Write summary, latency, device and handoff tables; return the paths."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {directory}: {exc.strerror or exc}") from exc
    paths = [os.path.join(directory, name) for name in (SUMMARY_FILE, LATENCY_FILE, DEVICE_FILE, HANDOFF_FILE)]
    _write_rows(paths[0], ("metric", "value"), list(r.summary().items()))
    _write_rows(paths[1], LATENCY_COLUMNS, [
        (x.edgelet_id, x.request_id, x.source_iot, x.delivering_edge, x.created_at,
         x.delivered_at, x.latency, x.execution_time, x.relayed)
        for x in r.responses
    ])
    _write_rows(paths[2], DEVICE_COLUMNS, [
        (d.device_id, d.kind, d.max_capacity, d.final_level, d.energy_consumed,
         d.depleted_at, d.battery_hours, d.edgelets)
        for d in r.devices
    ])
    _write_rows(paths[3], HANDOFF_COLUMNS, [
        (h.time, h.device_id, h.from_edge, h.to_edge, h.cause) for h in r.handoff_log
    ])
    return paths
