"""Scenario documents: parsing, validation, serialization and entity expansion.

The IoT section keeps the field names of the published JSON example
(``iOTDeviceEntities``, ``complexityOfDataPackage``, ``numberofEntity`` ...).
Edge devices, the MEL graph, the protocol catalog and run settings are
extensions written in the same style; see ``docs/scenario-schema.md``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from edgesim import protocols
from edgesim.devices import (
    Battery,
    EdgeDeviceState,
    IoTDeviceState,
    IoTProtocolSpec,
    Location,
    MobilityState,
    NetworkProtocolSpec,
    SignalRange,
)
from edgesim.graph import MEL, ApplicationGraph, GraphError, validate_graph

Path = Tuple[Union[str, int], ...]


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` holds ``(path, message)`` pairs."""

    def __init__(self, errors: List[Tuple[str, str]]) -> None:
        self.errors = errors
        super().__init__("; ".join(f"{p or '<root>'}: {m}" for p, m in errors))


def _path(parts: Path) -> str:
    return ".".join(str(p) for p in parts)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LocationModel(_Model):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


class VectorModel(_Model):
    x: float = 0.0
    y: float = 0.0


class MobilityModel(_Model):
    movable: bool = False
    location: LocationModel = Field(default_factory=LocationModel)
    velocity: Optional[VectorModel] = None
    time_interval: Optional[float] = Field(None, alias="timeInterval", gt=0)

    @model_validator(mode="after")
    def _static_means_still(self) -> "MobilityModel":
        if not self.movable and self.velocity is not None and (self.velocity.x or self.velocity.y):
            raise ValueError("velocity must be zero when movable is false")
        return self


class NetworkModel(_Model):
    network_type: str = Field(alias="networkType")
    communication_protocol: str = Field(alias="communicationProtocol")


class IoTTemplate(_Model):
    mobility: MobilityModel = Field(default_factory=MobilityModel, alias="mobilityEntity")
    assignment_id: Union[int, str] = Field(alias="assignmentId")
    iot_class_name: str = Field("", alias="ioTClassName")
    iot_type: str = Field(alias="ioTType")
    name: str = Field(min_length=1)
    data_frequency: float = Field(gt=0)
    data_generation_time: float = Field(1.0, alias="dataGenerationTime", ge=0)
    complexity_of_data_package: float = Field(alias="complexityOfDataPackage", ge=0)
    network: NetworkModel = Field(alias="networkModelEntity")
    max_battery_capacity: float = Field(ge=0)
    battery_drainage_rate: float = Field(ge=0)
    processing_ability: float = Field(0.0, alias="processingAbility")
    number_of_entity: int = Field(1, alias="numberofEntity", ge=1)


class EdgeBatteryModel(_Model):
    max_capacity: float = Field(alias="maxBatteryCapacity", ge=0)
    processing_rate: float = Field(alias="processingDrainageRate", ge=0)
    transfer_rate: float = Field(alias="transferDrainageRate", ge=0)


class EdgeTemplate(_Model):
    name: str = Field(min_length=1)
    type: str = "edge"
    mobility: MobilityModel = Field(default_factory=MobilityModel, alias="mobilityEntity")
    signal_range: Union[float, VectorModel] = Field(alias="signalRange")
    max_iot_capacity: int = Field(alias="maxIoTDeviceCapacity", ge=0)
    mips: float = Field(gt=0)
    ram: float = Field(0.0, ge=0)
    bandwidth: float = Field(gt=0)
    network_protocols: List[str] = Field(alias="networkProtocols", min_length=1)
    iot_protocols: List[str] = Field(default_factory=list, alias="ioTProtocols")
    battery: Optional[EdgeBatteryModel] = None
    number_of_entity: int = Field(1, alias="numberofEntity", ge=1)

    @model_validator(mode="after")
    def _positive_range(self) -> "EdgeTemplate":
        r = self.signal_range
        rx, ry = (r, r) if isinstance(r, (int, float)) else (r.x, r.y)
        if not (rx > 0 and ry > 0):
            raise ValueError("signalRange must be positive")
        return self


class MELModel(_Model):
    id: Union[int, str]
    host_edge: str = Field(alias="hostEdge")
    shrinking_factor: float = Field(alias="shrinkingFactor", ge=0, le=1)
    instructions_per_mb: float = Field(alias="instructionsPerMB", ge=0)
    shrink_instructions_per_mb: float = Field(0.0, alias="shrinkInstructionsPerMB", ge=0)
    uplink: List[Union[int, str]] = Field(default_factory=list, alias="upLink")
    downlink: List[Union[int, str]] = Field(default_factory=list, alias="downLink")
    assignment_id: Optional[Union[int, str]] = Field(None, alias="assignmentId")


class NetworkProtocolModel(_Model):
    name: str
    data_rate: float = Field(alias="dataRate", gt=0)
    max_packet_size: int = Field(alias="maxPacketSize", gt=0)


class IoTProtocolModel(_Model):
    name: str
    header_size: int = Field(alias="headerSize", ge=0)
    qos_ack_factor: float = Field(1.0, alias="qosAckFactor", ge=1)
    energy_coefficient: float = Field(1.0, alias="energyCoefficient", gt=0)


class ProtocolCatalogModel(_Model):
    network_protocols: List[NetworkProtocolModel] = Field(default_factory=list, alias="networkProtocols")
    iot_protocols: List[IoTProtocolModel] = Field(default_factory=list, alias="ioTProtocols")


class RunModel(_Model):
    horizon: Optional[float] = Field(None, gt=0)
    seed: int = 0
    tracking_interval: float = Field(1.0, alias="trackingInterval", gt=0)
    relay_delay: float = Field(0.0, alias="relayDelay", ge=0)
    stop_on_iot_depletion: bool = Field(False, alias="stopOnIotDepletion")
    generation_jitter: float = Field(0.0, alias="generationJitter", ge=0, lt=1)


class ScenarioConfig(_Model):
    name: str = "scenario"
    iot_devices: List[IoTTemplate] = Field(default_factory=list, alias="iOTDeviceEntities")
    edge_devices: List[EdgeTemplate] = Field(default_factory=list, alias="edgeDeviceEntities")
    mel_graph: List[MELModel] = Field(default_factory=list, alias="melGraph")
    protocol_catalog: ProtocolCatalogModel = Field(default_factory=ProtocolCatalogModel, alias="protocolCatalog")
    run: RunModel = Field(default_factory=RunModel)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def network_catalog(self) -> Dict[str, NetworkProtocolSpec]:
        cat = dict(protocols.NETWORK_PROTOCOLS)
        for p in self.protocol_catalog.network_protocols:
            name = protocols.canonical_network(p.name)
            cat[name] = NetworkProtocolSpec(name, p.data_rate, p.max_packet_size)
        return cat

    def iot_catalog(self) -> Dict[str, IoTProtocolSpec]:
        cat = dict(protocols.IOT_PROTOCOLS)
        for p in self.protocol_catalog.iot_protocols:
            name = protocols.canonical_iot(p.name)
            cat[name] = IoTProtocolSpec(name, p.header_size, p.qos_ack_factor, p.energy_coefficient)
        return cat


# -- parsing ------------------------------------------------------------------

def _is_union_tag(part: str) -> bool:
    return part[:1].isupper() or "[" in part or part in ("float", "int", "str")


def _pydantic_errors(exc: ValidationError) -> List[Tuple[str, str]]:
    out = []
    for err in exc.errors():
        # drop union-branch markers such as 'float' / 'VectorModel'
        loc = [p for p in err["loc"] if not (isinstance(p, str) and _is_union_tag(p))]
        out.append((_path(tuple(loc)), err["msg"]))
    return out


def _check_references(cfg: ScenarioConfig) -> List[Tuple[str, str]]:
    errors: List[Tuple[str, str]] = []
    nets = cfg.network_catalog()
    iots = cfg.iot_catalog()

    seen_names: Dict[str, str] = {}
    for i, t in enumerate(cfg.iot_devices):
        base = ("iOTDeviceEntities", i)
        if t.name in seen_names:
            errors.append((_path(base + ("name",)), f"duplicate template name {t.name!r}"))
        seen_names[t.name] = _path(base)
        if protocols.canonical_network(t.network.network_type) not in nets:
            errors.append((_path(base + ("networkModelEntity", "networkType")),
                           f"unknown network protocol {t.network.network_type!r}"))
        if protocols.canonical_iot(t.network.communication_protocol) not in iots:
            errors.append((_path(base + ("networkModelEntity", "communicationProtocol")),
                           f"unknown IoT protocol {t.network.communication_protocol!r}"))
    for i, t in enumerate(cfg.edge_devices):
        base = ("edgeDeviceEntities", i)
        if t.name in seen_names:
            errors.append((_path(base + ("name",)), f"duplicate template name {t.name!r}"))
        seen_names[t.name] = _path(base)
        for j, n in enumerate(t.network_protocols):
            if protocols.canonical_network(n) not in nets:
                errors.append((_path(base + ("networkProtocols", j)), f"unknown network protocol {n!r}"))
        for j, n in enumerate(t.iot_protocols):
            if protocols.canonical_iot(n) not in iots:
                errors.append((_path(base + ("ioTProtocols", j)), f"unknown IoT protocol {n!r}"))

    ids = [d for d in _iot_ids(cfg)] + [d for d in _edge_ids(cfg)]
    dupes = sorted({d for d in ids if ids.count(d) > 1})
    for d in dupes:
        errors.append(("", f"expanded entity id {d!r} is not unique"))

    edge_lookup = _edge_lookup(cfg)
    mel_ids: List[str] = []
    for i, m in enumerate(cfg.mel_graph):
        base = ("melGraph", i)
        mid = str(m.id)
        if mid in mel_ids:
            errors.append((_path(base + ("id",)), f"duplicate MEL id {mid!r}"))
        mel_ids.append(mid)
        hosts = edge_lookup.get(m.host_edge)
        if hosts is None:
            errors.append((_path(base + ("hostEdge",)), f"unknown edge {m.host_edge!r}"))
        elif len(hosts) != 1:
            errors.append((_path(base + ("hostEdge",)),
                           f"{m.host_edge!r} expands to {len(hosts)} edges; name one instance"))
    for i, m in enumerate(cfg.mel_graph):
        for key, links in (("upLink", m.uplink), ("downLink", m.downlink)):
            for j, ref in enumerate(links):
                if str(ref) not in mel_ids:
                    errors.append((_path(("melGraph", i, key, j)), f"unknown MEL {ref!r}"))
    if errors:
        return errors

    if cfg.mel_graph:
        graph = _build_graph(cfg, edge_lookup)
        try:
            validate_graph(graph)
        except GraphError as exc:
            errors.append(("melGraph", str(exc)))
            return errors
        keys = {m.assignment_id for m in (graph.mels[k] for k in graph.entry_mels)}
        for i, t in enumerate(cfg.iot_devices):
            if str(t.assignment_id) not in keys:
                errors.append((_path(("iOTDeviceEntities", i, "assignmentId")),
                               f"no entry MEL with assignment {t.assignment_id!r}"))

    if cfg.run.horizon is None:
        for i, t in enumerate(cfg.iot_devices):
            coeff = iots[protocols.canonical_iot(t.network.communication_protocol)].energy_coefficient
            per_sample = t.complexity_of_data_package * t.battery_drainage_rate * coeff
            if t.max_battery_capacity > 0 and per_sample <= 0:
                errors.append((_path(("iOTDeviceEntities", i)),
                               "device never drains its battery; set run.horizon to bound the run"))
    return errors


def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    errors = _check_references(cfg)
    if errors:
        raise ScenarioError(errors)
    return cfg


def scenario_from_dict(doc: Any) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(doc)
    except ValidationError as exc:
        raise ScenarioError(_pydantic_errors(exc)) from None
    return validate_scenario(cfg)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a scenario document.

    A bare ``"iOTDeviceEntities": [...]`` fragment, as printed in the
    original configuration example, is accepted and wrapped in an object.
    """
    body = text.strip()
    if body.startswith('"'):
        body = "{" + body + "}"
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ScenarioError([(f"line {exc.lineno} column {exc.colno}", f"JSON syntax error: {exc.msg}")]) from None
    if not isinstance(doc, dict):
        raise ScenarioError([("", "scenario must be a JSON object")])
    return scenario_from_dict(doc)


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- expansion ----------------------------------------------------------------

def _iot_ids(cfg: ScenarioConfig) -> List[str]:
    return [f"{t.name}-{k}" for t in cfg.iot_devices for k in range(t.number_of_entity)]


def _edge_ids(cfg: ScenarioConfig) -> List[str]:
    return [f"{t.name}-{k}" for t in cfg.edge_devices for k in range(t.number_of_entity)]


def _edge_lookup(cfg: ScenarioConfig) -> Dict[str, List[str]]:
    """Edge references: template name -> its instances, instance id -> itself."""
    out: Dict[str, List[str]] = {}
    for t in cfg.edge_devices:
        inst = [f"{t.name}-{k}" for k in range(t.number_of_entity)]
        out.setdefault(t.name, inst)
        for i in inst:
            out[i] = [i]
    return out


def _build_graph(cfg: ScenarioConfig, edge_lookup: Dict[str, List[str]]) -> ApplicationGraph:
    mels = {}
    for m in cfg.mel_graph:
        mels[str(m.id)] = MEL(
            id=str(m.id),
            host_edge=edge_lookup[m.host_edge][0],
            shrink_factor=m.shrinking_factor,
            instructions_per_mb=m.instructions_per_mb,
            shrink_instructions_per_mb=m.shrink_instructions_per_mb,
            uplinks=[str(u) for u in m.uplink],
            downlinks=[str(d) for d in m.downlink],
            assignment_id="" if m.assignment_id is None else str(m.assignment_id),
        )
    return ApplicationGraph(mels)


def _mobility(m: MobilityModel, default_interval: float) -> MobilityState:
    vx, vy = (m.velocity.x, m.velocity.y) if m.velocity is not None else (0.0, 0.0)
    return MobilityState(
        movable=m.movable,
        location=Location(m.location.x, m.location.y, m.location.z),
        velocity_x=vx,
        velocity_y=vy,
        update_interval=m.time_interval or default_interval,
    )


@dataclass
class Population:
    iot: List[IoTDeviceState]
    edges: List[EdgeDeviceState]
    graph: ApplicationGraph


def expand_entities(cfg: ScenarioConfig) -> Population:
    """Instantiate every template ``numberofEntity`` times with ids ``<name>-<k>``."""
    nets = cfg.network_catalog()
    iots = cfg.iot_catalog()
    interval = cfg.run.tracking_interval
    edge_lookup = _edge_lookup(cfg)
    graph = _build_graph(cfg, edge_lookup)

    edges: List[EdgeDeviceState] = []
    for t in cfg.edge_devices:
        r = t.signal_range
        rng = SignalRange(r, r) if isinstance(r, (int, float)) else SignalRange(r.x, r.y)
        for k in range(t.number_of_entity):
            battery = None
            if t.battery is not None:
                battery = Battery(t.battery.max_capacity, t.battery.max_capacity,
                                  t.battery.processing_rate, t.battery.transfer_rate)
            eid = f"{t.name}-{k}"
            edges.append(EdgeDeviceState(
                id=eid,
                device_type=t.type,
                mobility=_mobility(t.mobility, interval),
                signal_range=rng,
                max_iot_capacity=t.max_iot_capacity,
                mips=t.mips,
                ram=t.ram,
                bandwidth=t.bandwidth,
                network_protocols=tuple(protocols.canonical_network(n) for n in t.network_protocols),
                iot_protocols=tuple(protocols.canonical_iot(n) for n in t.iot_protocols),
                battery=battery,
                hosted_mels=[m.id for m in graph.mels.values() if m.host_edge == eid],
            ))

    devices: List[IoTDeviceState] = []
    for t in cfg.iot_devices:
        net = nets[protocols.canonical_network(t.network.network_type)]
        proto = iots[protocols.canonical_iot(t.network.communication_protocol)]
        for k in range(t.number_of_entity):
            devices.append(IoTDeviceState(
                id=f"{t.name}-{k}",
                iot_type=t.iot_type,
                mobility=_mobility(t.mobility, interval),
                # one drainage rate: everything the device handles is sent
                battery=Battery(t.max_battery_capacity, t.max_battery_capacity, 0.0, t.battery_drainage_rate),
                data_frequency=t.data_frequency,
                data_generation_time=t.data_generation_time,
                data_size_per_generation=t.complexity_of_data_package,
                network_protocol=net,
                iot_protocol=proto,
                assignment_id=str(t.assignment_id),
            ))
    return Population(devices, edges, graph)
