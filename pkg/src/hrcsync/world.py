"""Interaction state and the effect rules of the primitive actions.

The state holds the four interaction features: end-effector availability,
agent poses, object poses and object characteristics. Two bookkeeping
fields ride along: the latest perceived human intent and the set of parts
already delivered to the human workspace.

States are treated as immutable values. ``apply_effect`` never mutates its
input; it returns a new ``WorldState``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Mapping, NamedTuple

from . import _frozen  # noqa: F401  (makes MappingProxyType picklable)
from .actions import (
    MANIPULATE_EFFECTS,
    Grasp,
    Manipulate,
    Move,
    Perceive,
    PrimitiveAction,
    Release,
    Wait,
)
from .world_types import Box, Intent, Pose

__all__ = [
    "Intent", "Pose", "Box", "ObjectKind", "Availability", "Characteristics",
    "ObjectRecord", "EndEffectorStatus", "WorldState", "WorldConfig",
    "PreconditionViolation", "UnknownObjectError", "Check", "check_precondition",
    "apply_effect", "to_snapshot", "from_snapshot",
]

ARMS = ("left", "right")
SNAPSHOT_VERSION = 1


class ObjectKind(str, Enum):
    LEG = "leg"
    SEAT = "seat"
    CROSSBAR = "crossbar"
    SCREW_BOX = "screw_box"
    SCREWDRIVER = "screwdriver"


class Availability(str, Enum):
    FREE = "free"
    HOLDING = "holding"
    MOVING = "moving"


class PreconditionViolation(Exception):
    def __init__(self, action, reason: str):
        super().__init__(f"{action.name}: {reason}")
        self.action = action
        self.reason = reason


class UnknownObjectError(KeyError):
    def __str__(self) -> str:
        return f"unknown object id {self.args[0]!r}"


@dataclass(frozen=True)
class Characteristics:
    kind: ObjectKind
    graspable: bool
    extent: tuple[float, float, float]
    count: int | None = None  # container content, None for non-containers
    fastened: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectKind(self.kind))
        ext = tuple(float(x) for x in self.extent)
        if len(ext) != 3 or not all(math.isfinite(x) and x > 0 for x in ext):
            raise ValueError(f"extent must be 3 strictly positive numbers, got {self.extent}")
        object.__setattr__(self, "extent", ext)
        if self.count is not None and self.count < 0:
            raise ValueError("container count cannot be negative")


@dataclass(frozen=True)
class ObjectRecord:
    id: str
    pose: Pose
    characteristics: Characteristics


@dataclass(frozen=True)
class EndEffectorStatus:
    arm: str
    pose: Pose
    availability: Availability = Availability.FREE
    held: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "availability", Availability(self.availability))
        if (self.availability is Availability.HOLDING) != (self.held is not None):
            raise ValueError("held object must be set exactly when availability is holding")

    @property
    def free(self) -> bool:
        return self.availability is Availability.FREE


def _freeze(objects) -> Mapping[str, ObjectRecord]:
    if isinstance(objects, MappingProxyType):
        return objects
    if not isinstance(objects, Mapping):
        objects = {o.id: o for o in objects}
    return MappingProxyType(dict(sorted(objects.items())))


@dataclass(frozen=True)
class WorldState:
    time: float
    effectors: tuple[EndEffectorStatus, ...]
    robot_pose: Pose
    human_pose: Pose
    objects: Mapping[str, ObjectRecord]
    human_intent: Intent = Intent.UNKNOWN
    delivered: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "effectors", tuple(self.effectors))
        object.__setattr__(self, "objects", _freeze(self.objects))
        object.__setattr__(self, "human_intent", Intent(self.human_intent))
        object.__setattr__(self, "delivered", frozenset(self.delivered))
        for oid, rec in self.objects.items():
            if oid != rec.id:
                raise ValueError(f"object table key {oid!r} does not match record id {rec.id!r}")
        arms = [e.arm for e in self.effectors]
        if len(set(arms)) != len(arms):
            raise ValueError("duplicate effector arm")
        held = [e.held for e in self.effectors if e.held is not None]
        if len(set(held)) != len(held):
            raise ValueError("an object is held by more than one effector")
        for h in held:
            if h not in self.objects:
                raise ValueError(f"effector holds unknown object {h!r}")
        missing = self.delivered - set(self.objects)
        if missing:
            raise ValueError(f"delivered contains unknown objects {sorted(missing)}")

    def effector(self, arm: str) -> EndEffectorStatus:
        for e in self.effectors:
            if e.arm == arm:
                return e
        raise KeyError(arm)

    def holder_of(self, obj: str) -> EndEffectorStatus | None:
        for e in self.effectors:
            if e.held == obj:
                return e
        return None

    def object(self, oid: str) -> ObjectRecord:
        try:
            return self.objects[oid]
        except KeyError:
            raise UnknownObjectError(oid) from None


DEFAULT_DURATIONS = {
    "grasp": 2.0,
    "release": 1.5,
    "move": 5.0,
    "manipulate": 3.0,
    "wait": 0.0,
    "perceive": 0.5,
}


@dataclass(frozen=True)
class WorldConfig:
    """Scenario-dependent constants used by the effect rules.

    ``delivery_zone`` is the human workspace volume: releasing an object
    inside it marks the object delivered. ``named_poses`` resolves the
    symbolic move targets used by the planning domain.
    """

    durations: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    delivery_zone: Box | None = None
    named_poses: Mapping[str, Pose] = field(default_factory=dict)
    grasp_reach: float | None = 0.05
    tick: float = 1.0 / 30.0

    def __post_init__(self):
        durations = dict(DEFAULT_DURATIONS)
        durations.update(self.durations)
        for k, v in durations.items():
            if k not in DEFAULT_DURATIONS:
                raise ValueError(f"unknown action duration key {k!r}")
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"duration for {k} must be finite and >= 0")
        object.__setattr__(self, "durations", MappingProxyType(durations))
        object.__setattr__(self, "named_poses", MappingProxyType(dict(self.named_poses)))


class Check(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _choose_arm(state: WorldState, arm: str | None):
    if arm is not None:
        try:
            eff = state.effector(arm)
        except KeyError:
            return None, f"unknown arm {arm!r}"
        if not eff.free:
            return None, f"{arm} arm not free"
        return eff, ""
    for eff in state.effectors:
        if eff.free:
            return eff, ""
    return None, "no free effector"


def check_precondition(state: WorldState, action: PrimitiveAction, config: WorldConfig | None = None) -> Check:
    """Pure applicability test; the reason names the first failing condition."""
    config = config or WorldConfig()
    if isinstance(action, (Wait, Perceive)):
        return Check(True)
    if isinstance(action, Grasp):
        if action.obj not in state.objects:
            return Check(False, f"unknown object {action.obj!r}")
        eff, why = _choose_arm(state, action.arm)
        if eff is None:
            return Check(False, why)
        rec = state.objects[action.obj]
        if not rec.characteristics.graspable:
            return Check(False, f"{action.obj} not graspable")
        holder = state.holder_of(action.obj)
        if holder is not None:
            return Check(False, f"{action.obj} already held by {holder.arm} arm")
        if action.obj in state.delivered:
            return Check(False, f"{action.obj} already delivered")
        if config.grasp_reach is not None and eff.pose.distance(rec.pose) > config.grasp_reach:
            return Check(False, f"{action.obj} out of reach of {eff.arm} arm")
        return Check(True)
    if isinstance(action, Release):
        if action.obj not in state.objects:
            return Check(False, f"unknown object {action.obj!r}")
        if state.holder_of(action.obj) is None:
            return Check(False, f"no effector holds {action.obj}")
        return Check(True)
    if isinstance(action, Move):
        if action.arm is not None and action.arm not in {e.arm for e in state.effectors}:
            return Check(False, f"unknown arm {action.arm!r}")
        return Check(True)
    if isinstance(action, Manipulate):
        if action.obj not in state.objects:
            return Check(False, f"unknown object {action.obj!r}")
        if action.effect not in MANIPULATE_EFFECTS:
            return Check(False, f"unknown manipulate effect {action.effect!r}")
        ch = state.objects[action.obj].characteristics
        if action.effect in ("decrement", "increment"):
            if ch.count is None:
                return Check(False, f"{action.obj} is not a container")
            if action.effect == "decrement" and ch.count == 0:
                return Check(False, "empty container")
        elif action.effect == "fasten" and ch.fastened:
            return Check(False, f"{action.obj} already fastened")
        elif action.effect == "unfasten" and not ch.fastened:
            return Check(False, f"{action.obj} not fastened")
        return Check(True)
    raise TypeError(f"not a primitive action: {action!r}")


def _replace_effector(state: WorldState, new: EndEffectorStatus) -> tuple[EndEffectorStatus, ...]:
    return tuple(new if e.arm == new.arm else e for e in state.effectors)


def _with_object(objects: Mapping[str, ObjectRecord], rec: ObjectRecord) -> dict:
    out = dict(objects)
    out[rec.id] = rec
    return out


def apply_effect(
    state: WorldState,
    action: PrimitiveAction,
    config: WorldConfig | None = None,
    *,
    percept: Intent | None = None,
) -> WorldState:
    """Return the state after ``action``; time advances by its configured duration.

    ``percept`` is only read by ``Perceive``, which stores it as the human
    intent. Raises ``PreconditionViolation`` when the action is not applicable
    and ``UnknownObjectError`` for object ids missing from the table.
    """
    config = config or WorldConfig()
    obj = getattr(action, "obj", None)
    if obj is not None and obj not in state.objects:
        raise UnknownObjectError(obj)
    chk = check_precondition(state, action, config)
    if not chk:
        raise PreconditionViolation(action, chk.reason)
    t = state.time + config.durations[action.name]

    if isinstance(action, Grasp):
        eff, _ = _choose_arm(state, action.arm)
        new_eff = replace(eff, availability=Availability.HOLDING, held=action.obj)
        return replace(state, time=t, effectors=_replace_effector(state, new_eff))

    if isinstance(action, Release):
        eff = state.holder_of(action.obj)
        rec = state.objects[action.obj]
        new_rec = replace(rec, pose=eff.pose)
        delivered = state.delivered
        zone = config.delivery_zone
        if zone is not None and zone.contains(eff.pose.position):
            delivered = delivered | {action.obj}
        return replace(
            state,
            time=t,
            effectors=_replace_effector(state, replace(eff, availability=Availability.FREE, held=None)),
            objects=_with_object(state.objects, new_rec),
            delivered=delivered,
        )

    if isinstance(action, Move):
        if action.arm is None:
            return replace(state, time=t, robot_pose=action.target)
        eff = state.effector(action.arm)
        objects = state.objects
        if eff.held is not None:
            objects = _with_object(objects, replace(objects[eff.held], pose=action.target))
        return replace(
            state,
            time=t,
            effectors=_replace_effector(state, replace(eff, pose=action.target)),
            objects=objects,
        )

    if isinstance(action, Manipulate):
        rec = state.objects[action.obj]
        ch = rec.characteristics
        if action.effect == "decrement":
            ch = replace(ch, count=ch.count - 1)
        elif action.effect == "increment":
            ch = replace(ch, count=ch.count + 1)
        else:
            ch = replace(ch, fastened=action.effect == "fasten")
        return replace(state, time=t, objects=_with_object(state.objects, replace(rec, characteristics=ch)))

    if isinstance(action, Perceive):
        intent = state.human_intent if percept is None else Intent(percept)
        return replace(state, time=t, human_intent=intent)

    # Wait leaves everything but the clock untouched
    return replace(state, time=t)


# -- snapshot format --------------------------------------------------------
# One JSON object per line, keys in this fixed order:
#   v, time, effectors[arm, availability, held, pose], robot_pose, human_pose,
#   objects[id, pose, kind, graspable, extent, count, fastened] (sorted by id),
#   human_intent, delivered (sorted)
# Poses are {"p": [x, y, z], "q": [w, x, y, z]}.


def _state_dict(state: WorldState) -> dict:
    return {
        "v": SNAPSHOT_VERSION,
        "time": state.time,
        "effectors": [
            {"arm": e.arm, "availability": e.availability.value, "held": e.held, "pose": e.pose.to_json()}
            for e in state.effectors
        ],
        "robot_pose": state.robot_pose.to_json(),
        "human_pose": state.human_pose.to_json(),
        "objects": [
            {
                "id": r.id,
                "pose": r.pose.to_json(),
                "kind": r.characteristics.kind.value,
                "graspable": r.characteristics.graspable,
                "extent": list(r.characteristics.extent),
                "count": r.characteristics.count,
                "fastened": r.characteristics.fastened,
            }
            for r in state.objects.values()
        ],
        "human_intent": state.human_intent.value,
        "delivered": sorted(state.delivered),
    }


def to_snapshot(state: WorldState) -> str:
    return json.dumps(_state_dict(state), separators=(",", ":"))


def from_snapshot(line: str) -> WorldState:
    d = json.loads(line)
    if d.get("v") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {d.get('v')!r}")
    objects = [
        ObjectRecord(
            o["id"],
            Pose.from_json(o["pose"]),
            Characteristics(o["kind"], o["graspable"], tuple(o["extent"]), o["count"], o["fastened"]),
        )
        for o in d["objects"]
    ]
    return WorldState(
        time=d["time"],
        effectors=[
            EndEffectorStatus(e["arm"], Pose.from_json(e["pose"]), e["availability"], e["held"])
            for e in d["effectors"]
        ],
        robot_pose=Pose.from_json(d["robot_pose"]),
        human_pose=Pose.from_json(d["human_pose"]),
        objects=objects,
        human_intent=d["human_intent"],
        delivered=d["delivered"],
    )
