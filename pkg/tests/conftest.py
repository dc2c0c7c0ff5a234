import os
from typing import Any, Dict, List, Optional

import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def fragment_text() -> str:
    with open(os.path.join(DATA, "iot_fragment.json"), encoding="utf-8") as fh:
        return fh.read()


def sensor(name="s", x=0.0, count=1, net="wifi", proto="coap", battery=10.0, drain=1.0,
           size=1.0, freq=1.0, assignment=1, velocity: Optional[tuple] = None) -> Dict[str, Any]:
    mob: Dict[str, Any] = {"movable": velocity is not None, "location": {"x": x, "y": 0.0, "z": 0.0}}
    if velocity is not None:
        mob["velocity"] = {"x": velocity[0], "y": velocity[1]}
    return {
        "mobilityEntity": mob, "assignmentId": assignment, "ioTType": "test", "name": name,
        "data_frequency": freq, "complexityOfDataPackage": size,
        "networkModelEntity": {"networkType": net, "communicationProtocol": proto},
        "max_battery_capacity": battery, "battery_drainage_rate": drain, "numberofEntity": count,
    }


def edge(name="E", x=0.0, rng=100.0, capacity=100, mips=1000.0, battery: Optional[float] = None,
         proc=0.1, comm=0.6, nets=("wifi",), iots=()) -> Dict[str, Any]:
    e: Dict[str, Any] = {
        "name": name, "mobilityEntity": {"location": {"x": x, "y": 0.0, "z": 0.0}},
        "signalRange": rng, "maxIoTDeviceCapacity": capacity, "mips": mips, "bandwidth": 1000.0,
        "networkProtocols": list(nets), "ioTProtocols": list(iots),
    }
    if battery is not None:
        e["battery"] = {"maxBatteryCapacity": battery, "processingDrainageRate": proc, "transferDrainageRate": comm}
    return e


def mel(id, host, rho=0.5, instr=1000.0, down: List = (), assignment=None) -> Dict[str, Any]:
    m = {"id": id, "hostEdge": host, "shrinkingFactor": rho, "instructionsPerMB": instr, "downLink": list(down)}
    if assignment is not None:
        m["assignmentId"] = assignment
    return m


def scenario(iot, edges, mels, **run) -> Dict[str, Any]:
    return {"name": "t", "iOTDeviceEntities": iot, "edgeDeviceEntities": edges, "melGraph": mels, "run": run}


# acceptance verdicts, echoed at the end of the run
ACCEPTANCE: List[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
