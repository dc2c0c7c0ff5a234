"""Discrete-event simulator for IoT devices offloading work to edge devices."""

from edgesim.metrics import MetricsReport, write_report
from edgesim.orchestration import Simulation, run_scenario
from edgesim.presets import preset
from edgesim.scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario

__all__ = [
    "MetricsReport",
    "ScenarioConfig",
    "ScenarioError",
    "Simulation",
    "load_scenario",
    "parse_scenario",
    "preset",
    "run_scenario",
    "write_report",
]
__version__ = "0.1.0"
