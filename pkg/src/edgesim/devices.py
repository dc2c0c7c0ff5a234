"""IoT and edge device state plus the energy, transmission and mobility models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from edgesim.graph import EdgeLet

BITS_PER_BYTE = 8
BYTES_PER_MB = 1_000_000
BITS_PER_MBIT = 1_000_000


@dataclass(frozen=True)
class Location:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite location {self}")

    def planar_distance(self, other: "Location") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class MobilityState:
    movable: bool = False
    location: Location = field(default_factory=Location)
    velocity_x: float = 0.0
    velocity_y: float = 0.0
    update_interval: float = 1.0
    clock: float = 0.0

    def __post_init__(self) -> None:
        if not self.movable and (self.velocity_x or self.velocity_y):
            raise ValueError("non-movable device must have zero velocity")
        if self.movable and not self.update_interval > 0:
            raise ValueError("movable device needs a positive update interval")


@dataclass(frozen=True)
class SignalRange:
    range_x: float
    range_y: float

    def __post_init__(self) -> None:
        if not (self.range_x > 0 and self.range_y > 0):
            raise ValueError(f"signal range must be positive, got {self}")


@dataclass
class Battery:
    """Linear battery. Drain rates are energy units per MB handled."""

    max_capacity: float
    current_level: float
    drain_rate_processing: float = 0.0
    drain_rate_transfer: float = 0.0

    def __post_init__(self) -> None:
        if self.max_capacity < 0 or not 0 <= self.current_level <= self.max_capacity:
            raise ValueError(f"battery level {self.current_level} outside [0, {self.max_capacity}]")
        if self.drain_rate_processing < 0 or self.drain_rate_transfer < 0:
            raise ValueError("drain rates must be non-negative")

    @property
    def depleted(self) -> bool:
        return self.current_level <= 0.0


@dataclass(frozen=True)
class NetworkProtocolSpec:
    name: str
    data_rate: float  # Mbps
    max_packet_size: int  # payload bytes per packet

    def __post_init__(self) -> None:
        if not self.data_rate > 0:
            raise ValueError(f"{self.name}: data rate must be > 0")
        if not self.max_packet_size > 0:
            raise ValueError(f"{self.name}: max packet size must be > 0")


@dataclass(frozen=True)
class IoTProtocolSpec:
    name: str
    header_size: int = 0  # bytes per packet
    qos_ack_factor: float = 1.0
    energy_coefficient: float = 1.0

    def __post_init__(self) -> None:
        if self.header_size < 0:
            raise ValueError(f"{self.name}: header size must be >= 0")
        if self.qos_ack_factor < 1:
            raise ValueError(f"{self.name}: qos ack factor must be >= 1")
        if not self.energy_coefficient > 0:
            raise ValueError(f"{self.name}: energy coefficient must be > 0")


@dataclass
class IoTDeviceState:
    id: str
    iot_type: str
    mobility: MobilityState
    battery: Battery
    data_frequency: float
    data_generation_time: float
    data_size_per_generation: float  # MB
    network_protocol: NetworkProtocolSpec
    iot_protocol: IoTProtocolSpec
    assignment_id: str = ""
    enabled: bool = True
    depleted_at: Optional[float] = None


@dataclass
class EdgeDeviceState:
    id: str
    device_type: str
    mobility: MobilityState
    signal_range: SignalRange
    max_iot_capacity: int
    mips: float
    ram: float
    bandwidth: float  # Mbps
    network_protocols: Tuple[str, ...] = ()
    iot_protocols: Tuple[str, ...] = ()  # empty: accepts any
    battery: Optional[Battery] = None
    hosted_mels: List[str] = field(default_factory=list)
    enabled: bool = True
    depleted_at: Optional[float] = None

    def supports(self, net: str, iot: str) -> bool:
        if net not in self.network_protocols:
            return False
        return not self.iot_protocols or iot in self.iot_protocols


def battery_consumption(
    data_size: float,
    shrink_factor: float,
    drain_proc: float,
    drain_comm: float,
    protocol_energy_coeff: float = 1.0,
) -> float:
    """Energy for handling ``data_size`` MB: (1-rho) processed locally, rho sent on."""
    if not 0.0 <= shrink_factor <= 1.0:
        raise ValueError(f"shrink factor {shrink_factor} outside [0, 1]")
    if data_size < 0 or drain_proc < 0 or drain_comm < 0 or protocol_energy_coeff < 0:
        raise ValueError("battery_consumption inputs must be non-negative")
    return data_size * ((1.0 - shrink_factor) * drain_proc + shrink_factor * drain_comm * protocol_energy_coeff)


def discharge(battery: Battery, amount: float) -> bool:
    """Remove ``amount`` in place, clamping at zero; True once empty."""
    if amount < 0:
        raise ValueError(f"negative drain {amount}")
    level = battery.current_level - amount
    battery.current_level = level if level > 0.0 else 0.0
    return battery.current_level == 0.0


def drain(battery: Battery, amount: float) -> Tuple[Battery, bool]:
    """Return the battery after removing ``amount`` (clamped at zero)."""
    after = replace(battery)
    depleted = discharge(after, amount)
    return after, depleted


def _packets(data_bytes: float, max_packet: int) -> int:
    # absorb float noise so 0.001 MB in 1-byte packets is 1000 packets, not 1001
    return math.ceil(data_bytes / max_packet - 1e-9)


def packet_count(data_size: float, net: NetworkProtocolSpec, iot: IoTProtocolSpec) -> float:
    """Packets on the wire, acknowledgement copies included."""
    return _packets(data_size * BYTES_PER_MB, net.max_packet_size) * iot.qos_ack_factor


def transmission_time(data_size: float, net: NetworkProtocolSpec, iot: IoTProtocolSpec) -> float:
    """Seconds to push ``data_size`` MB through ``net`` framed by ``iot``."""
    if data_size < 0:
        raise ValueError(f"negative data size {data_size}")
    if not net.data_rate > 0:
        raise ValueError(f"{net.name}: zero data rate")
    if data_size == 0:
        return 0.0
    data_bytes = data_size * BYTES_PER_MB
    packets = _packets(data_bytes, net.max_packet_size)
    total_bits = (data_bytes + packets * iot.header_size) * BITS_PER_BYTE * iot.qos_ack_factor
    return total_bits / (net.data_rate * BITS_PER_MBIT)


def update_location(m: MobilityState, interval: float) -> Tuple[MobilityState, Tuple[float, float]]:
    if not m.movable:
        raise ValueError("update_location called on a non-movable device")
    if not interval > 0:
        raise ValueError(f"interval must be positive, got {interval}")
    dx = m.velocity_x * interval
    dy = m.velocity_y * interval
    loc = Location(m.location.x + dx, m.location.y + dy, m.location.z)
    return replace(m, location=loc, clock=m.clock + interval), (dx, dy)


def is_out_of_range(iot_loc: Location, edge: EdgeDeviceState) -> bool:
    # box centred on the edge, not on the origin
    centre = edge.mobility.location
    return (
        abs(iot_loc.x - centre.x) > edge.signal_range.range_x
        or abs(iot_loc.y - centre.y) > edge.signal_range.range_y
    )


def generation_interval(d: IoTDeviceState) -> float:
    return 1.0 / d.data_frequency


def generate_edgelet(
    d: IoTDeviceState, now: float, edgelet_id: int, destination_mel: Optional[str]
) -> Optional[EdgeLet]:
    """One sensed sample from ``d``; None when the device is shut down."""
    if not d.enabled:
        return None
    return EdgeLet(
        id=edgelet_id,
        payload_size=d.data_size_per_generation,
        source_iot=d.id,
        destination_mel=destination_mel,
        created_at=now,
    )
