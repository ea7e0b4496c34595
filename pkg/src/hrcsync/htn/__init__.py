from ..actions import (
    Grasp,
    Manipulate,
    Move,
    Perceive,
    PrimitiveAction,
    Release,
    Wait,
)
from .domain import (
    Domain,
    DomainParseError,
    DomainValidationError,
    Method,
    load_domain,
    load_domain_file,
)
from .executor import CommandRecord, execute_step
from .planner import (
    CompoundTask,
    DepthLimitExceeded,
    NoApplicableMethod,
    Plan,
    PlanningError,
    decompose,
)

__all__ = [
    "Grasp", "Manipulate", "Move", "Perceive", "PrimitiveAction", "Release", "Wait",
    "Domain", "DomainParseError", "DomainValidationError", "Method", "load_domain",
    "load_domain_file", "CommandRecord", "execute_step", "CompoundTask",
    "DepthLimitExceeded", "NoApplicableMethod", "Plan", "PlanningError", "decompose",
]
