"""Total-order HTN decomposition.

Depth-first, left to right. Methods are tried in declaration order and the
first one whose precondition holds and whose subtasks all decompose wins;
a method that fails further down is abandoned for the next one. Every
primitive is checked against the projected state and applied to it, so later
preconditions see the effects of earlier actions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..actions import Grasp, Manipulate, Move, Perceive, PrimitiveAction, Release, Wait
from ..formats import header
from ..world import WorldConfig, WorldState, apply_effect, check_precondition
from ..world_types import Intent, Pose
from .domain import Domain, Literal, Method

DEFAULT_DEPTH_LIMIT = 64


class PlanningError(RuntimeError):
    pass


class NoApplicableMethod(PlanningError):
    def __init__(self, task: "CompoundTask", state: WorldState, reason: str):
        super().__init__(
            f"no applicable method for {task} at t={state.time:g} "
            f"(delivered={sorted(state.delivered)}): {reason}"
        )
        self.task = task
        self.reason = reason


class DepthLimitExceeded(PlanningError):
    pass


@dataclass(frozen=True)
class CompoundTask:
    name: str
    args: tuple = ()

    def __str__(self) -> str:
        return f"{self.name}({', '.join(map(str, self.args))})"


@dataclass
class Plan:
    actions: list[PrimitiveAction] = field(default_factory=list)
    provenance: list[tuple[str, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def count(self, name: str) -> int:
        return sum(a.name == name for a in self.actions)

    def dump(self) -> str:
        lines = [header("plan")]
        for i, (a, path) in enumerate(zip(self.actions, self.provenance)):
            rec = {"i": i, "action": a.name, "args": a.args(), "path": list(path)}
            lines.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(lines) + "\n"


class _Fail(Exception):
    def __init__(self, reason: str, depth: int = 0):
        super().__init__(reason)
        self.reason = reason
        self.depth = depth


def _subst(term, binding: dict, context: dict):
    if isinstance(term, tuple):
        return (term[0], *(_subst(t, binding, context) for t in term[1:]))
    if term.startswith("?"):
        return binding[term]
    if term.startswith("$"):
        return context[term[1:]]
    return term


def _bind(lit: Literal, binding: dict, context: dict) -> Literal:
    return Literal(lit.pred, tuple(_subst(a, binding, context) for a in lit.args), lit.negated)


def holds(lit: Literal, state: WorldState) -> bool:
    a = lit.args
    objects = state.objects
    if lit.pred == "free":
        val = any(e.arm == a[0] and e.free for e in state.effectors)
    elif lit.pred == "holding":
        val = any(e.arm == a[0] and e.held == a[1] for e in state.effectors)
    elif lit.pred == "exists":
        val = a[0] in objects
    elif lit.pred == "graspable":
        val = a[0] in objects and objects[a[0]].characteristics.graspable
    elif lit.pred == "delivered":
        val = a[0] in state.delivered
    elif lit.pred == "nonempty":
        val = a[0] in objects and (objects[a[0]].characteristics.count or 0) > 0
    elif lit.pred == "kind":
        val = a[0] in objects and objects[a[0]].characteristics.kind.value == a[1]
    elif lit.pred == "side":
        # left of the robot means y >= robot base y
        if a[0] not in objects:
            val = False
        else:
            left = objects[a[0]].pose.position[1] >= state.robot_pose.position[1]
            val = left if a[1] == "left" else not left
    elif lit.pred == "intent":
        val = state.human_intent.value == a[0]
    else:
        raise ValueError(f"unknown predicate {lit.pred}")
    return val != lit.negated


def _target(expr, state: WorldState, config: WorldConfig) -> Pose:
    if isinstance(expr, tuple):
        form, *args = expr
        if form == "at":
            if args[0] not in state.objects:
                raise _Fail(f"unknown object {args[0]!r} in move target")
            return state.objects[args[0]].pose
        key = "/".join(args)
        if key not in config.named_poses:
            raise _Fail(f"unknown named pose {key!r}")
        return config.named_poses[key]
    if expr not in config.named_poses:
        raise _Fail(f"unknown named pose {expr!r}")
    return config.named_poses[expr]


def ground(name: str, args: tuple, state: WorldState, config: WorldConfig) -> PrimitiveAction:
    if name == "grasp":
        return Grasp(args[1], args[0])
    if name == "release":
        return Release(args[0])
    if name == "move":
        arm = None if args[0] == "base" else args[0]
        return Move(_target(args[1], state, config), arm)
    if name == "manipulate":
        return Manipulate(args[0], args[1])
    if name == "wait":
        return Wait(Intent(args[0]))
    if name == "perceive":
        return Perceive(args[0])
    raise ValueError(f"unknown primitive {name}")


class _Search:
    def __init__(self, domain: Domain, config: WorldConfig, context: dict, depth_limit: int):
        self.domain = domain
        self.config = config
        self.context = context
        self.depth_limit = depth_limit

    def task(self, task: CompoundTask, state: WorldState, depth: int, path: tuple):
        if depth > self.depth_limit:
            raise DepthLimitExceeded(f"decomposition deeper than {self.depth_limit} at {task}")
        deepest = _Fail(f"no method precondition holds for {task}", depth)
        for m in self.domain.methods_for(task.name):
            binding = dict(zip(m.params, task.args))
            if not all(holds(_bind(lit, binding, self.context), state) for lit in m.pre):
                continue
            try:
                return self.subtasks(m, binding, state, depth + 1, path + (f"{task}:{m.name}",))
            except _Fail as e:
                if e.depth >= deepest.depth:
                    deepest = e
        raise deepest

    def subtasks(self, m: Method, binding: dict, state: WorldState, depth: int, path: tuple):
        actions, prov = [], []
        for st in m.subtasks:
            args = tuple(_subst(a, binding, self.context) for a in st.args)
            if st.name in self.domain.primitives:
                action = ground(st.name, args, state, self.config)
                chk = check_precondition(state, action, self.config)
                if not chk:
                    raise _Fail(f"{action.name} in {m.name}: {chk.reason}", depth)
                state = apply_effect(state, action, self.config)
                actions.append(action)
                prov.append(path)
            else:
                a, p, state = self.task(CompoundTask(st.name, args), state, depth, path)
                actions += a
                prov += p
        return actions, prov, state


def decompose(
    root: CompoundTask | str,
    state: WorldState,
    domain: Domain,
    config: WorldConfig | None = None,
    *,
    channel: str = "gaze",
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> Plan:
    """First complete plan for ``root`` from ``state``.

    Raises ``NoApplicableMethod`` (with the deepest failure reason) or
    ``DepthLimitExceeded``.
    """
    if isinstance(root, str):
        root = CompoundTask(root)
    if root.name not in domain.tasks:
        raise PlanningError(f"unknown root task {root.name!r}")
    search = _Search(domain, config or WorldConfig(), {"channel": channel}, depth_limit)
    try:
        actions, prov, _ = search.task(root, state, 0, ())
    except _Fail as e:
        raise NoApplicableMethod(root, state, e.reason) from None
    return Plan(actions, prov)
