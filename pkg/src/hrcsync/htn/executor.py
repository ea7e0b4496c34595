"""Step-wise plan execution with intent-gated waits."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..actions import Perceive, PrimitiveAction, Wait
from ..world import WorldConfig, WorldState, apply_effect
from ..world_types import Intent
from .planner import Plan

EXECUTED = "executed"
PERCEIVED = "perceived"
BLOCKED = "blocked"
RELEASED = "released"


@dataclass(frozen=True)
class CommandRecord:
    """What the robot did on one executor step."""

    index: int
    action: PrimitiveAction
    kind: str
    t_start: float
    t_end: float

    @property
    def channel(self) -> str | None:
        return self.action.channel if isinstance(self.action, Perceive) else None


def execute_step(
    plan: Plan,
    cursor: int,
    state: WorldState,
    percept: Intent | None = None,
    config: WorldConfig | None = None,
) -> tuple[int, WorldState, CommandRecord]:
    """Advance the plan by one step.

    A ``Wait`` only advances when ``percept`` satisfies its condition;
    otherwise the cursor stays put and the clock moves by one tick. Any other
    action applies its effect and advances. Precondition violations propagate:
    they mean the plan and the state have diverged.
    """
    if not 0 <= cursor < len(plan):
        raise IndexError(f"cursor {cursor} outside plan of length {len(plan)}")
    config = config or WorldConfig()
    action = plan.actions[cursor]
    t0 = state.time
    if isinstance(action, Wait):
        if action.satisfied(percept):
            new = apply_effect(state, action, config)
            return cursor + 1, new, CommandRecord(cursor, action, RELEASED, t0, new.time)
        new = replace(state, time=t0 + config.tick)
        return cursor, new, CommandRecord(cursor, action, BLOCKED, t0, new.time)
    new = apply_effect(state, action, config, percept=percept)
    kind = PERCEIVED if isinstance(action, Perceive) else EXECUTED
    return cursor + 1, new, CommandRecord(cursor, action, kind, t0, new.time)
