"""The six primitive actions shared by the world model and the planner."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .world_types import Intent, Pose

CHANNELS = ("gaze", "imu")
MANIPULATE_EFFECTS = ("decrement", "increment", "fasten", "unfasten")


@dataclass(frozen=True)
class Grasp:
    obj: str
    arm: str | None = None
    name = "grasp"

    def args(self) -> dict:
        return {"obj": self.obj, "arm": self.arm}


@dataclass(frozen=True)
class Release:
    obj: str
    name = "release"

    def args(self) -> dict:
        return {"obj": self.obj}


@dataclass(frozen=True)
class Move:
    target: Pose
    arm: str | None = None  # None moves the robot base
    name = "move"

    def args(self) -> dict:
        return {"arm": self.arm, "target": self.target.to_json()}


@dataclass(frozen=True)
class Manipulate:
    obj: str
    effect: str
    name = "manipulate"

    def args(self) -> dict:
        return {"obj": self.obj, "effect": self.effect}


@dataclass(frozen=True)
class Wait:
    """Blocks until the perceived intent equals ``intent``."""

    intent: Intent = Intent.IDLE
    name = "wait"

    def satisfied(self, percept: Intent | None) -> bool:
        return percept is not None and Intent(percept) == self.intent

    def args(self) -> dict:
        return {"intent": self.intent.value}


@dataclass(frozen=True)
class Perceive:
    channel: str = "gaze"
    name = "perceive"

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown perception channel {self.channel!r}")

    def args(self) -> dict:
        return {"channel": self.channel}


PrimitiveAction = Union[Grasp, Release, Move, Manipulate, Wait, Perceive]
ACTION_TYPES = (Grasp, Release, Move, Manipulate, Wait, Perceive)
ACTION_NAMES = tuple(cls.name for cls in ACTION_TYPES)


def action_from_json(name: str, args: dict) -> PrimitiveAction:
    if name == "grasp":
        return Grasp(args["obj"], args.get("arm"))
    if name == "release":
        return Release(args["obj"])
    if name == "move":
        return Move(Pose.from_json(args["target"]), args.get("arm"))
    if name == "manipulate":
        return Manipulate(args["obj"], args["effect"])
    if name == "wait":
        return Wait(Intent(args["intent"]))
    if name == "perceive":
        return Perceive(args["channel"])
    raise ValueError(f"unknown action {name!r}")
