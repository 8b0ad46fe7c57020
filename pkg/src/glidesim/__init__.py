"""glidesim: deterministic 2D simulator for a human-pushed, steer-only
navigation assistant with shared-control modes."""

from .config import SimConfig
from .engine import EventLog, Simulation, TrialMetrics, metrics, replay, run
from .floorplan import ScenarioMap, load_map, save_map, validate_map

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "EventLog",
    "Simulation",
    "TrialMetrics",
    "metrics",
    "replay",
    "run",
    "ScenarioMap",
    "load_map",
    "save_map",
    "validate_map",
    "__version__",
]
