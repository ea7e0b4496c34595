from .compare import ComparisonTable, compare, summarise
from .human import ActivityState, HumanEmitter, HumanTimeline, emit_human
from .runner import (
    ChannelMismatch,
    Event,
    EventLog,
    MetricsReport,
    audit_log,
    gaze_latency_bound,
    imu_latency_bound,
    run_scenario,
)
from .scenario import ScenarioError, ScenarioParseError, ScenarioScript, load_scenario, parse_scenario

__all__ = [
    "ComparisonTable", "compare", "summarise", "ActivityState", "HumanEmitter", "HumanTimeline",
    "emit_human", "ChannelMismatch", "Event", "EventLog", "MetricsReport", "audit_log",
    "gaze_latency_bound", "imu_latency_bound", "run_scenario", "ScenarioError",
    "ScenarioParseError", "ScenarioScript", "load_scenario", "parse_scenario",
]
