"""The three shipped case studies as scenario documents.

Each builder returns a plain JSON-ready dict so callers can tweak or sweep
any field before validation. Values not given by the case-study tables
(instruction coefficients, RSU batteries, the second healthcare edge's
position) are calibration defaults and are marked as such below.
"""

from __future__ import annotations

import copy
from typing import Any, Callable, Dict

from edgesim.scenario import ScenarioConfig, scenario_from_dict

PRESETS = ("case1", "case2", "case3")

# edge device shared by the healthcare and smart-building cases
_RASPBERRY_PI: Dict[str, Any] = {
    "type": "Raspberry Pi",
    "mobilityEntity": {"movable": False, "location": {"x": 100.0, "y": 0.0, "z": 0.0}},
    "signalRange": 100.0,
    "maxIoTDeviceCapacity": 10000,
    "mips": 10000.0,
    "ram": 10000.0,
    "bandwidth": 10000.0,
    "networkProtocols": ["bluetooth"],
    "ioTProtocols": [],
    "battery": {"maxBatteryCapacity": 20000.0, "processingDrainageRate": 0.1, "transferDrainageRate": 0.6},
    "numberofEntity": 1,
}


def _sensor(name: str, iot_type: str, protocol: str, count: int, assignment: int = 1) -> Dict[str, Any]:
    return {
        "mobilityEntity": {"movable": False, "location": {"x": 0.0, "y": 0.0, "z": 0.0}},
        "assignmentId": assignment,
        "ioTClassName": "edgesim.devices.IoTDeviceState",
        "ioTType": iot_type,
        "name": name,
        "data_frequency": 1.0,
        "dataGenerationTime": 1.0,
        "complexityOfDataPackage": 1.0,
        "networkModelEntity": {"networkType": "bluetooth", "communicationProtocol": protocol},
        "max_battery_capacity": 300.0,
        "battery_drainage_rate": 1.0,
        "processingAbility": 1.0,
        "numberofEntity": count,
    }


def _edge(name: str, x: float) -> Dict[str, Any]:
    e = copy.deepcopy(_RASPBERRY_PI)
    e["name"] = name
    e["mobilityEntity"]["location"]["x"] = x
    return e


def case1(shrink: float = 0.5) -> Dict[str, Any]:
    """Healthcare: one sensor feeding a two-MEL chain split over two edges."""
    return {
        "name": f"case1-shrink-{shrink:g}",
        "iOTDeviceEntities": [_sensor("ecg", "healthcare", "coap", 1)],
        # the second edge's position is not tabulated; it sits 100 m further out
        "edgeDeviceEntities": [_edge("E1", 100.0), _edge("E2", 200.0)],
        "melGraph": [
            # calibration: 1000 MI/MB to analyse, 500 MI/MB to compress
            {"id": 1, "hostEdge": "E1", "shrinkingFactor": shrink, "instructionsPerMB": 1000.0,
             "shrinkInstructionsPerMB": 500.0, "upLink": [], "downLink": [2], "assignmentId": 1},
            {"id": 2, "hostEdge": "E2", "shrinkingFactor": 0.1, "instructionsPerMB": 1000.0,
             "shrinkInstructionsPerMB": 0.0, "upLink": [1], "downLink": []},
        ],
        "run": {"seed": 0},
    }


def case2(devices: int = 10, protocol: str = "coap") -> Dict[str, Any]:
    """Smart building: ``devices`` sensors sharing one edge and one MEL."""
    return {
        "name": f"case2-{protocol}-{devices}",
        "iOTDeviceEntities": [_sensor("sensor", "environmental", protocol, devices)],
        "edgeDeviceEntities": [_edge("E1", 100.0)],
        "melGraph": [
            # calibration: 400 MI/MB gives 0.04 s per sample, so the edge
            # saturates at about 25 sensors
            {"id": 1, "hostEdge": "E1", "shrinkingFactor": 0.5, "instructionsPerMB": 400.0,
             "shrinkInstructionsPerMB": 0.0, "upLink": [], "downLink": [], "assignmentId": 1},
        ],
        "run": {"seed": 0},
    }


def case3(cars: int = 1) -> Dict[str, Any]:
    """Connected cars driving past two roadside units."""
    rsu = {
        "type": "Raspberry Pi",
        "signalRange": 50.0,
        "maxIoTDeviceCapacity": 10000,
        "mips": 10000.0,
        "ram": 10000.0,
        "bandwidth": 10000.0,
        "networkProtocols": ["wifi"],
        "ioTProtocols": [],
        # no battery is tabulated for the RSUs; reuse the healthcare edge pack
        # so their energy use is observable
        "battery": {"maxBatteryCapacity": 20000.0, "processingDrainageRate": 0.1, "transferDrainageRate": 0.6},
        "numberofEntity": 1,
    }
    rsus = []
    for name, x in (("RSU1", 0.0), ("RSU2", 50.0)):
        r = copy.deepcopy(rsu)
        r["name"] = name
        r["mobilityEntity"] = {"movable": False, "location": {"x": x, "y": 0.0, "z": 0.0}}
        rsus.append(r)
    return {
        "name": f"case3-cars-{cars}",
        "iOTDeviceEntities": [{
            "mobilityEntity": {"movable": True, "location": {"x": 0.0, "y": 0.0, "z": 0.0},
                               "velocity": {"x": 0.5, "y": 0.0}},
            "assignmentId": 1,
            "ioTClassName": "edgesim.devices.IoTDeviceState",
            "ioTType": "car",
            "name": "car",
            "data_frequency": 1.0,
            "dataGenerationTime": 1.0,
            # calibration: 0.4 MB samples drain the 70-unit pack in 140 samples
            "complexityOfDataPackage": 0.4,
            "networkModelEntity": {"networkType": "Wi-Fi (802.11p)", "communicationProtocol": "xmpp"},
            "max_battery_capacity": 70.0,
            "battery_drainage_rate": 1.0,
            "processingAbility": 1.0,
            "numberofEntity": cars,
        }],
        "edgeDeviceEntities": rsus,
        "melGraph": [
            # one replica per RSU; 12500 MI/MB is 0.5 s per sample
            {"id": 1, "hostEdge": "RSU1", "shrinkingFactor": 0.5, "instructionsPerMB": 12500.0,
             "upLink": [], "downLink": [], "assignmentId": 1},
            {"id": 2, "hostEdge": "RSU2", "shrinkingFactor": 0.5, "instructionsPerMB": 12500.0,
             "upLink": [], "downLink": [], "assignmentId": 1},
        ],
        "run": {"seed": 0, "trackingInterval": 0.25},
    }


BUILDERS: Dict[str, Callable[..., Dict[str, Any]]] = {"case1": case1, "case2": case2, "case3": case3}

# sweepable preset parameters and their types
PARAMETERS = {
    "case1": {"shrink": float},
    "case2": {"devices": int, "protocol": str},
    "case3": {"cars": int},
}


def preset_document(name: str, **params: Any) -> Dict[str, Any]:
    if name not in BUILDERS:
        raise KeyError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")
    return BUILDERS[name](**params)


def preset(name: str, **params: Any) -> ScenarioConfig:
    return scenario_from_dict(preset_document(name, **params))
