"""Reference protocol catalog.

Data rates: wifi and 4g-lte use 200/150 Mbps; the low-power links take the
approximate rates of the usual IoT protocol comparison table. Packet sizes,
XMPP's header and every energy/ack coefficient are calibration defaults,
overridable per scenario through ``protocolCatalog``.
"""

from __future__ import annotations

from typing import Dict

from edgesim.devices import IoTProtocolSpec, NetworkProtocolSpec

NETWORK_PROTOCOLS: Dict[str, NetworkProtocolSpec] = {
    p.name: p
    for p in (
        NetworkProtocolSpec("wifi", 200.0, 2304),
        NetworkProtocolSpec("4g-lte", 150.0, 1500),
        NetworkProtocolSpec("bluetooth", 0.27, 251),
        NetworkProtocolSpec("zigbee", 0.25, 127),
        NetworkProtocolSpec("lora", 0.05, 255),
        NetworkProtocolSpec("sigfox", 0.001, 12),
        NetworkProtocolSpec("nfc", 0.042, 255),
    )
}

# CoAP must outlast XMPP on the same battery; 1.25 puts the two lifetimes
# in roughly the 1.25:1 ratio seen for the smart-building case.
IOT_PROTOCOLS: Dict[str, IoTProtocolSpec] = {
    p.name: p
    for p in (
        IoTProtocolSpec("coap", header_size=4, qos_ack_factor=1.0, energy_coefficient=1.0),
        IoTProtocolSpec("xmpp", header_size=0, qos_ack_factor=1.0, energy_coefficient=1.25),
        IoTProtocolSpec("mqtt", header_size=2, qos_ack_factor=1.0, energy_coefficient=1.1),
        IoTProtocolSpec("amqp", header_size=8, qos_ack_factor=1.0, energy_coefficient=1.2),
    )
}

# Network aliases accepted in scenario files.
NETWORK_ALIASES = {
    "wi-fi": "wifi",
    "wi-fi (802.11p)": "wifi",
    "802.11p": "wifi",
    "4g": "4g-lte",
    "lte": "4g-lte",
    "ble": "bluetooth",
}


def canonical_network(name: str) -> str:
    key = name.strip().lower()
    return NETWORK_ALIASES.get(key, key)


def canonical_iot(name: str) -> str:
    return name.strip().lower()
