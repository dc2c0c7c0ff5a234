"""Broker and edge-datacenter behaviour driven by the event kernel.

One :class:`Simulation` owns every piece of mutable state for a run: the
kernel, the device population, the connection table, per-edge processing
queues and the metrics being collected. Runs share nothing, so sweeps can
execute them in separate processes.
"""

from __future__ import annotations

import itertools
import logging
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from edgesim.devices import (
    EdgeDeviceState,
    IoTDeviceState,
    IoTProtocolSpec,
    NetworkProtocolSpec,
    battery_consumption,
    discharge,
    generate_edgelet,
    generation_interval,
    is_out_of_range,
    transmission_time,
    update_location,
)
from edgesim.graph import MEL, ApplicationGraph, EdgeLet, mel_processing_time, shrink_and_forward
from edgesim.kernel import Event, EventKind, Kernel
from edgesim.metrics import DeviceRecord, DrainRecord, HandoffRecord, MetricsReport, ResponseRecord
from edgesim.scenario import Population, ScenarioConfig, expand_entities, validate_scenario

logger = logging.getLogger(__name__)

BROKER = "broker"
DATACENTER = "datacenter"

PENDING, ACTIVE, DROPPED = "pending", "active", "dropped"

# frame for edge-to-edge transfers; payload only
BACKHAUL_FRAMING = IoTProtocolSpec("backhaul", header_size=0)


# -- connection bookkeeping -----------------------------------------------------

@dataclass
class Binding:
    edge_id: str
    mel_id: str
    status: str = ACTIVE


@dataclass
class ConnectionTable:
    bindings: Dict[str, Binding] = field(default_factory=dict)

    def active(self, iot_id: str) -> Optional[Binding]:
        b = self.bindings.get(iot_id)
        return b if b is not None and b.status == ACTIVE else None

    def connected_count(self, edge_id: str, excluding: str = "") -> int:
        return sum(
            1 for iot, b in self.bindings.items()
            if b.status == ACTIVE and b.edge_id == edge_id and iot != excluding
        )

    def bound_to(self, edge_id: str) -> List[str]:
        return sorted(i for i, b in self.bindings.items() if b.status == ACTIVE and b.edge_id == edge_id)

    def bind(self, iot_id: str, edge_id: str, mel_id: str) -> None:
        self.bindings[iot_id] = Binding(edge_id, mel_id, ACTIVE)

    def drop(self, iot_id: str) -> None:
        b = self.bindings.get(iot_id)
        if b is not None:
            b.status = DROPPED


@dataclass
class BrokerState:
    available_iot: Set[str] = field(default_factory=set)
    available_edges: Set[str] = field(default_factory=set)
    pending_results: Dict[int, str] = field(default_factory=dict)


@dataclass
class ConnectionResult:
    ack: bool
    edge_id: Optional[str] = None
    mel_id: Optional[str] = None
    reason: Optional[str] = None


def _entry_mel_on(edge: EdgeDeviceState, graph: ApplicationGraph, assignment: str) -> Optional[str]:
    for mel in graph.entries_for(assignment):
        if mel.host_edge == edge.id:
            return mel.id
    return None


def _filter_edges(
    iot: IoTDeviceState,
    candidates: Sequence[EdgeDeviceState],
    table: ConnectionTable,
    graph: ApplicationGraph,
) -> Tuple[List[EdgeDeviceState], Optional[str]]:
    """Apply the availability filters in order; report the one that emptied the set."""
    pool = [e for e in candidates if e.enabled and _entry_mel_on(e, graph, iot.assignment_id) is not None]
    if not pool:
        return [], "no-edge"
    loc = iot.mobility.location
    pool = [e for e in pool if not is_out_of_range(loc, e)]
    if not pool:
        return [], "out-of-range"
    pool = [e for e in pool if e.supports(iot.network_protocol.name, iot.iot_protocol.name)]
    if not pool:
        return [], "protocol-mismatch"
    pool = [e for e in pool if table.connected_count(e.id, excluding=iot.id) < e.max_iot_capacity]
    if not pool:
        return [], "capacity"
    return pool, None


def select_edge(
    iot: IoTDeviceState,
    candidates: Sequence[EdgeDeviceState],
    table: Optional[ConnectionTable] = None,
    graph: Optional[ApplicationGraph] = None,
) -> Optional[str]:
    """Nearest available edge (planar distance, ties by id), or None.

    Without a graph every enabled edge counts as hosting the device's MEL.
    """
    table = table or ConnectionTable()
    if graph is None:
        graph = _universal_graph(candidates, iot.assignment_id)
    pool, _ = _filter_edges(iot, candidates, table, graph)
    if not pool:
        return None
    loc = iot.mobility.location
    return min(pool, key=lambda e: (loc.planar_distance(e.mobility.location), e.id)).id


def _universal_graph(candidates: Iterable[EdgeDeviceState], assignment: str) -> ApplicationGraph:
    mels = {
        f"{assignment}@{e.id}": MEL(f"{assignment}@{e.id}", e.id, 1.0, 0.0, assignment_id=assignment)
        for e in candidates
    }
    return ApplicationGraph(mels)


def establish_connection(
    iot: IoTDeviceState,
    table: ConnectionTable,
    edges: Sequence[EdgeDeviceState],
    graph: Optional[ApplicationGraph] = None,
) -> ConnectionResult:
    """Bind ``iot`` to the best available edge and record it in ``table``."""
    if not iot.enabled:
        return ConnectionResult(False, reason="device-disabled")
    return _bind_best(iot, table, edges, graph)


def _bind_best(
    iot: IoTDeviceState,
    table: ConnectionTable,
    edges: Sequence[EdgeDeviceState],
    graph: Optional[ApplicationGraph],
) -> ConnectionResult:
    if graph is None:
        graph = _universal_graph(edges, iot.assignment_id)
    pool, reason = _filter_edges(iot, edges, table, graph)
    if not pool:
        return ConnectionResult(False, reason=reason)
    loc = iot.mobility.location
    edge = min(pool, key=lambda e: (loc.planar_distance(e.mobility.location), e.id))
    mel_id = _entry_mel_on(edge, graph, iot.assignment_id)
    table.bind(iot.id, edge.id, mel_id)
    return ConnectionResult(True, edge.id, mel_id)


# -- processing queues ----------------------------------------------------------

@dataclass
class Job:
    edgelet: EdgeLet
    mel_id: str
    enqueued_at: float
    start: float
    completion: float
    cancelled: bool = False


class FifoPolicy:
    """Single CPU per edge, shared by its MELs in arrival order."""

    name = "fifo"

    def start_time(self, queue: "ProcessingQueue", now: float) -> float:
        return max(now, queue.busy_until)


@dataclass
class ProcessingQueue:
    jobs: Deque[Job] = field(default_factory=deque)
    busy_until: float = 0.0
    policy: FifoPolicy = field(default_factory=FifoPolicy)


def submit_edgelet(e: EdgeLet, q: ProcessingQueue, mel: MEL, mips: float, now: float) -> float:
    """Queue ``e`` behind earlier work; return its completion time."""
    service = mel_processing_time(e.payload_size, mel, mips)
    start = q.policy.start_time(q, now)
    completion = start + service
    q.busy_until = completion
    q.jobs.append(Job(e, mel.id, now, start, completion))
    return completion


# -- the run --------------------------------------------------------------------

class Simulation:
    def __init__(self, cfg: ScenarioConfig, trace: bool = False) -> None:
        self.cfg = cfg
        pop: Population = expand_entities(cfg)
        self.graph = pop.graph
        self.iot: Dict[str, IoTDeviceState] = {d.id: d for d in pop.iot}
        self.edges: Dict[str, EdgeDeviceState] = {e.id: e for e in pop.edges}
        self.edge_list = pop.edges
        self.kernel = Kernel(trace=trace)
        self.table = ConnectionTable()
        self.queues: Dict[str, ProcessingQueue] = {e: ProcessingQueue() for e in self.edges}
        self.broker = BrokerState(set(self.iot), set(self.edges))
        self.report = MetricsReport(scenario=cfg.name, seed=cfg.run.seed)
        self.rng = random.Random(cfg.run.seed)
        self._ids = itertools.count()
        self._next_id = self._ids.__next__
        # request id -> [open branches, failure reason or None]
        self._requests: Dict[int, list] = {}
        self._last_edge: Dict[str, str] = {}
        self._generated_by: Dict[str, int] = {d: 0 for d in self.iot}
        self._processed_by: Dict[str, int] = {e: 0 for e in self.edges}
        self._successors = {m: self.graph.successors(m) for m in self.graph.mels}
        self._live_iot = 0
        self._handlers = {
            EventKind.CONNECT_ACK: self._on_connect_ack,
            EventKind.GENERATE_DATA: self._on_generate,
            EventKind.EDGELET_ARRIVAL: self._on_arrival,
            EventKind.PROCESSING_COMPLETE: self._on_complete,
            EventKind.LOCATION_UPDATE: self._on_location_update,
            EventKind.BATTERY_UPDATE: self._on_battery_update,
            EventKind.RELAY_DELIVERY: self._on_delivery,
            EventKind.TERMINATE: self._on_terminate,
        }
        for entity in [BROKER, DATACENTER, *self.iot, *self.edges]:
            self.kernel.register(entity, self._dispatch)

    # -- setup --------------------------------------------------------------
    def _setup(self) -> None:
        k = self.kernel
        run = self.cfg.run
        if run.horizon is not None:
            k.schedule(run.horizon, DATACENTER, EventKind.TERMINATE)
        for d in self.iot.values():
            if d.battery.max_capacity <= 0:
                d.enabled = False
                d.depleted_at = 0.0
                self.broker.available_iot.discard(d.id)
        self._live_iot = sum(1 for d in self.iot.values() if d.enabled)
        for dev in list(self.iot.values()) + self.edge_list:
            if dev.mobility.movable and dev.enabled:
                k.schedule(dev.mobility.update_interval, dev.id, EventKind.LOCATION_UPDATE)
        for d in self.iot.values():
            if not d.enabled:
                continue
            res = establish_connection(d, self.table, self.edge_list, self.graph)
            if res.ack:
                self._last_edge[d.id] = res.edge_id
                k.schedule(0.0, d.id, EventKind.CONNECT_ACK, res.edge_id)
            else:
                self.report.connection_nacks += 1
                logger.debug("initial connection for %s refused: %s", d.id, res.reason)
                # the broker still asks every device to sense; requests are
                # discarded until an edge becomes reachable
                k.schedule(0.0, d.id, EventKind.GENERATE_DATA)

    def run(self) -> MetricsReport:
        started = time.perf_counter()
        self._setup()
        self.kernel.run()
        self._finish()
        self.report.wall_clock = time.perf_counter() - started
        return self.report

    def _dispatch(self, event: Event) -> None:
        self._handlers[event.kind](event)

    # -- request accounting ------------------------------------------------
    def _open_request(self, root: int) -> None:
        self.report.generated += 1
        self._requests[root] = [1, None]

    def _branch(self, root: int, extra: int) -> None:
        self._requests[root][0] += extra

    def _close_branch(self, root: int, outcome: str) -> None:
        entry = self._requests[root]
        entry[0] -= 1
        if outcome != "delivered" and entry[1] is None:
            entry[1] = outcome
            if outcome == "discarded":
                self.report.discarded += 1
            else:
                self.report.undelivered += 1
        if entry[0] == 0:
            if entry[1] is None:
                self.report.delivered += 1
            del self._requests[root]

    # -- batteries ----------------------------------------------------------
    def _debit(self, device_id: str, battery, data_size: float, rho: float, coeff: float) -> bool:
        amount = battery_consumption(data_size, rho, battery.drain_rate_processing,
                                     battery.drain_rate_transfer, coeff)
        before = battery.current_level
        depleted = discharge(battery, amount)
        self.report.drains.append(DrainRecord(
            self.kernel.now(), device_id, data_size, rho, battery.drain_rate_processing,
            battery.drain_rate_transfer, coeff, amount, before - battery.current_level, battery.current_level,
        ))
        return depleted

    def _iot_depleted(self, d: IoTDeviceState) -> None:
        d.enabled = False
        d.depleted_at = self.kernel.now()
        self.broker.available_iot.discard(d.id)
        self._live_iot -= 1
        if self._live_iot == 0 and self.cfg.run.stop_on_iot_depletion:
            self.kernel.stop("iot-depleted")

    # -- connections ---------------------------------------------------------
    def _connect(self, d: IoTDeviceState, cause: str) -> Optional[Binding]:
        # a depleted device no longer sends, but may still be owed results
        res = _bind_best(d, self.table, self.edge_list, self.graph)
        if not res.ack:
            self.report.connection_nacks += 1
            return None
        previous = self._last_edge.get(d.id)
        if previous is not None and previous != res.edge_id:
            self.report.handoffs += 1
            self.report.handoff_log.append(HandoffRecord(self.kernel.now(), d.id, previous, res.edge_id, cause))
        self._last_edge[d.id] = res.edge_id
        return self.table.active(d.id)

    def _check_binding(self, d: IoTDeviceState, cause: str) -> None:
        b = self.table.active(d.id)
        if b is None:
            return
        if is_out_of_range(d.mobility.location, self.edges[b.edge_id]):
            self.table.drop(d.id)
            self._connect(d, cause)

    # -- handlers -------------------------------------------------------------
    def _on_connect_ack(self, ev: Event) -> None:
        self.kernel.schedule(ev.fire_at, ev.target, EventKind.GENERATE_DATA)

    def _on_generate(self, ev: Event) -> None:
        d = self.iot[ev.target]
        now = ev.fire_at
        e = generate_edgelet(d, now, self._next_id(), None)
        if e is None:
            return
        self._open_request(e.id)
        self._generated_by[d.id] += 1
        # the sample is uploaded before the broker checks availability
        if self._debit(d.id, d.battery, e.payload_size, 1.0, d.iot_protocol.energy_coefficient):
            self._iot_depleted(d)
        b = self.table.active(d.id)
        if b is not None and not self.edges[b.edge_id].enabled:
            self.table.drop(d.id)
            b = None
        if b is None:
            b = self._connect(d, "reconnect")
        if b is None:
            self._close_branch(e.id, "discarded")
        else:
            e.destination_mel = b.mel_id
            e.entry_edge = b.edge_id
            delay = transmission_time(e.payload_size, d.network_protocol, d.iot_protocol)
            self.kernel.schedule(now + delay, b.edge_id, EventKind.EDGELET_ARRIVAL, e)
        if d.enabled:
            gap = generation_interval(d)
            jitter = self.cfg.run.generation_jitter
            if jitter:
                gap *= 1.0 + self.rng.uniform(-jitter, jitter)
            self.kernel.schedule(now + gap, d.id, EventKind.GENERATE_DATA)

    def _on_arrival(self, ev: Event) -> None:
        e: EdgeLet = ev.payload
        edge = self.edges[ev.target]
        if not edge.enabled:
            self._reroute(e, edge)
            return
        if e.hops == 0:
            e.entry_arrival = ev.fire_at
        mel = self.graph.mels[e.destination_mel]
        q = self.queues[edge.id]
        completion = submit_edgelet(e, q, mel, edge.mips, ev.fire_at)
        self.kernel.schedule(completion, edge.id, EventKind.PROCESSING_COMPLETE, q.jobs[-1])

    def _on_complete(self, ev: Event) -> None:
        job: Job = ev.payload
        edge = self.edges[ev.target]
        if job.cancelled or not edge.enabled:
            # moved elsewhere, or about to be by the pending detach
            return
        q = self.queues[edge.id]
        q.jobs.popleft()
        now = ev.fire_at
        e = job.edgelet
        mel = self.graph.mels[job.mel_id]
        self._processed_by[edge.id] += 1
        if edge.battery is not None:
            if self._debit(edge.id, edge.battery, e.payload_size, mel.shrink_factor, 1.0):
                edge.enabled = False
                edge.depleted_at = now
                self.kernel.schedule(now, DATACENTER, EventKind.BATTERY_UPDATE, edge.id)
        children = shrink_and_forward(e, mel, self._successors[mel.id], self._next_id)
        self._branch(e.root_id, len(children) - 1)
        for child in children:
            if child.destination_mel is None:
                self._return_result(child, now)
                continue
            target = self.graph.mels[child.destination_mel].host_edge
            delay = 0.0 if target == edge.id else self._backhaul_time(child.payload_size, edge, self.edges[target])
            self.kernel.schedule(now + delay, target, EventKind.EDGELET_ARRIVAL, child)

    def _backhaul_time(self, size: float, a: EdgeDeviceState, b: EdgeDeviceState) -> float:
        link = NetworkProtocolSpec("backhaul", min(a.bandwidth, b.bandwidth), 1 << 30)
        return transmission_time(size, link, BACKHAUL_FRAMING)

    def _return_result(self, result: EdgeLet, now: float) -> None:
        d = self.iot[result.source_iot]
        b = self.table.active(d.id)
        if b is None:
            self._close_branch(result.root_id, "undelivered")
            return
        relayed = b.edge_id != result.entry_edge
        extra = 0.0
        if relayed:
            # edge-to-edge hand-over of the result; free unless configured
            self.report.relays += 1
            extra = self.cfg.run.relay_delay
        self.broker.pending_results[result.id] = d.id
        delay = extra + transmission_time(result.payload_size, d.network_protocol, d.iot_protocol)
        self.kernel.schedule(now + delay, d.id, EventKind.RELAY_DELIVERY, (result, b.edge_id, relayed, now))

    def _on_delivery(self, ev: Event) -> None:
        result, via, relayed, completed_at = ev.payload
        self.broker.pending_results.pop(result.id, None)
        self.report.responses.append(ResponseRecord(
            edgelet_id=result.id,
            request_id=result.root_id,
            source_iot=result.source_iot,
            delivering_edge=via,
            created_at=result.created_at,
            delivered_at=ev.fire_at,
            execution_time=completed_at - result.entry_arrival,
            relayed=relayed,
        ))
        self._close_branch(result.root_id, "delivered")

    def _on_location_update(self, ev: Event) -> None:
        if self._live_iot == 0:
            return
        now = ev.fire_at
        if ev.target in self.iot:
            d = self.iot[ev.target]
            if not d.enabled:
                return
            d.mobility, _ = update_location(d.mobility, d.mobility.update_interval)
            if self.table.active(d.id) is None:
                self._connect(d, "reconnect")
            else:
                self._check_binding(d, "mobility")
            interval = d.mobility.update_interval
        else:
            edge = self.edges[ev.target]
            if not edge.enabled:
                return
            edge.mobility, _ = update_location(edge.mobility, edge.mobility.update_interval)
            for iot_id in self.table.bound_to(edge.id):
                self._check_binding(self.iot[iot_id], "edge-moved")
            interval = edge.mobility.update_interval
        self.kernel.schedule(now + interval, ev.target, EventKind.LOCATION_UPDATE)

    def _on_battery_update(self, ev: Event) -> None:
        self.detach_depleted_edge(self.edges[ev.payload])

    def _on_terminate(self, ev: Event) -> None:
        self.kernel.stop("horizon")

    # -- edge failure ----------------------------------------------------------
    def detach_depleted_edge(self, edge: EdgeDeviceState) -> None:
        """Disable ``edge``, rebind its devices and move its unserved work."""
        now = self.kernel.now()
        edge.enabled = False
        if edge.depleted_at is None:
            edge.depleted_at = now
        self.broker.available_edges.discard(edge.id)
        q = self.queues[edge.id]
        unserved = [j for j in q.jobs if not j.cancelled]
        for j in unserved:
            j.cancelled = True
        q.jobs.clear()
        q.busy_until = now
        for iot_id in self.table.bound_to(edge.id):
            self.table.drop(iot_id)
            self._connect(self.iot[iot_id], "edge-depleted")
        for j in unserved:
            self._reroute(j.edgelet, edge)
        if not any(e.enabled for e in self.edge_list):
            self.kernel.stop("all-edges-disabled")

    def _reroute(self, e: EdgeLet, dead: EdgeDeviceState) -> None:
        """Hand ``e`` to an equivalent MEL on another edge at no cost, or discard it."""
        mel = self.graph.mels[e.destination_mel]
        target: Optional[Tuple[str, str]] = None
        if e.hops == 0:
            d = self.iot[e.source_iot]
            b = self.table.active(d.id)
            if b is not None and self.edges[b.edge_id].enabled:
                target = (b.edge_id, b.mel_id)
            else:
                edge_id = select_edge(d, self.edge_list, self.table, self.graph)
                if edge_id is not None:
                    target = (edge_id, _entry_mel_on(self.edges[edge_id], self.graph, d.assignment_id))
        else:
            origin = dead.mobility.location
            options = sorted(
                (origin.planar_distance(self.edges[m.host_edge].mobility.location), m.host_edge, m.id)
                for m in self.graph.mels.values()
                if m.assignment_id == mel.assignment_id and self.edges[m.host_edge].enabled
            )
            if options:
                target = (options[0][1], options[0][2])
        if target is None:
            self._close_branch(e.root_id, "discarded")
            return
        e.destination_mel = target[1]
        if e.hops == 0:
            e.entry_edge = target[0]
        self.kernel.schedule(self.kernel.now(), target[0], EventKind.EDGELET_ARRIVAL, e)

    # -- wrap-up ----------------------------------------------------------------
    def _finish(self) -> None:
        r = self.report
        k = self.kernel
        r.termination = k.stop_reason or "exhausted"
        r.final_time = k.now()
        r.events = k.dispatched
        r.in_flight = sum(1 for n, failed in self._requests.values() if n > 0 and failed is None)
        end = r.final_time
        for d in sorted(self.iot.values(), key=lambda x: x.id):
            b = d.battery
            used = b.max_capacity - b.current_level
            r.devices.append(DeviceRecord(
                device_id=d.id, kind="iot", max_capacity=b.max_capacity, final_level=b.current_level,
                energy_consumed=used, depleted_at=d.depleted_at, edgelets=self._generated_by[d.id],
                battery_hours=_battery_hours(b.max_capacity, used, d.depleted_at, end),
            ))
        for e in sorted(self.edge_list, key=lambda x: x.id):
            b = e.battery
            if b is None:
                r.devices.append(DeviceRecord(e.id, "edge", None, None, 0.0, None, self._processed_by[e.id]))
                continue
            used = b.max_capacity - b.current_level
            r.devices.append(DeviceRecord(
                device_id=e.id, kind="edge", max_capacity=b.max_capacity, final_level=b.current_level,
                energy_consumed=used, depleted_at=e.depleted_at, edgelets=self._processed_by[e.id],
                battery_hours=_battery_hours(b.max_capacity, used, e.depleted_at, end),
            ))


def _battery_hours(capacity: float, used: float, depleted_at: Optional[float], end: float) -> Optional[float]:
    """Depletion time, or the lifetime projected from the average drain so far."""
    if depleted_at is not None:
        return depleted_at
    if used <= 0 or end <= 0:
        return None
    return capacity * end / used


def run_scenario(cfg: ScenarioConfig, trace: bool = False) -> MetricsReport:
    validate_scenario(cfg)
    return Simulation(cfg, trace=trace).run()
