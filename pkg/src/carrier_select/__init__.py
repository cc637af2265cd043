"""User-driven multi-carrier access selection: simulator, strategies and evaluation harness."""

from .model import (
    RAT,
    Cell,
    CarrierNetwork,
    Direction,
    Flow,
    Metric,
    PerformanceModel,
    QosProfile,
    RadioTrace,
    ScanResult,
    Scenario,
    ScenarioError,
    SibConfig,
    load_scenario,
    rss_at,
    validate_scenario,
)
from .envsim import CellularEvent, Engine, EventKind
from .harness import MetricsReport, RunConfig, Simulation, compare, compute_metrics, run_scenario
from .strategies import BUILTINS, Decision, oracle_optimal, run_strategy

__all__ = [
    "RAT", "Cell", "CarrierNetwork", "Direction", "Flow", "Metric", "PerformanceModel",
    "QosProfile", "RadioTrace", "ScanResult", "Scenario", "ScenarioError", "SibConfig",
    "load_scenario", "rss_at", "validate_scenario", "CellularEvent", "Engine", "EventKind",
    "MetricsReport", "RunConfig", "Simulation", "compare", "compute_metrics", "run_scenario",
    "BUILTINS", "Decision", "oracle_optimal", "run_strategy",
]
