"""Gaze-based intent: ray cast against workspace boxes plus dwell hysteresis.

A gaze ray landing in the human's own workspace counts as Working evidence;
landing on the robot area, on a parts table, or on nothing counts as Idle
evidence. The emitted label only flips once the opposite evidence has
persisted for ``dwell_s`` seconds. ``dwell_s = 0`` gives the raw per-ray rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .world_types import Box, Intent

DIRECTION_TOL = 1e-6
_EPS_T = 1e-9  # guards dwell comparisons against tick round-off


class AoiRole(str, Enum):
    HUMAN_WORKSPACE = "human_workspace"
    ROBOT_AREA = "robot_area"
    PARTS_TABLE = "parts_table"


class GazeStreamError(ValueError):
    pass


@dataclass(frozen=True)
class GazeSample:
    t: float
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]

    def __post_init__(self):
        o = tuple(float(x) for x in self.origin)
        d = tuple(float(x) for x in self.direction)
        if len(o) != 3 or len(d) != 3 or not all(map(math.isfinite, o + d + (self.t,))):
            raise ValueError("gaze sample needs a finite time, origin and direction")
        n = math.sqrt(sum(x * x for x in d))
        if abs(n - 1.0) > DIRECTION_TOL:
            raise ValueError(f"gaze direction must be unit length, got norm {n}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    @classmethod
    def towards(cls, t: float, origin, target) -> "GazeSample":
        d = [b - a for a, b in zip(origin, target)]
        n = math.sqrt(sum(x * x for x in d))
        return cls(t, tuple(origin), tuple(x / n for x in d))


@dataclass(frozen=True)
class Aoi:
    name: str
    box: Box
    role: AoiRole

    def __post_init__(self):
        object.__setattr__(self, "role", AoiRole(self.role))

    def translated(self, v) -> "Aoi":
        return Aoi(self.name, self.box.translated(v), self.role)


@dataclass(frozen=True)
class AoiHit:
    aoi: str
    distance: float
    role: AoiRole


def validate_aois(aois: Sequence[Aoi]) -> None:
    names = [a.name for a in aois]
    if len(set(names)) != len(names):
        raise ValueError("AOI names must be unique")
    n_ws = sum(a.role is AoiRole.HUMAN_WORKSPACE for a in aois)
    if n_ws != 1:
        raise ValueError(f"exactly one human_workspace AOI required, found {n_ws}")


def ray_box_entry(origin, direction, box: Box) -> float | None:
    """Slab-method entry distance of a ray into a closed box, or None.

    An origin inside the box enters at distance 0.
    """
    t_near = -math.inf
    t_far = math.inf
    for o, d, lo, hi in zip(origin, direction, box.lo, box.hi):
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_near:
            t_near = t1
        if t2 < t_far:
            t_far = t2
        if t_near > t_far:
            return None
    if t_far < 0.0:
        return None
    return max(t_near, 0.0)


def cast_ray(sample: GazeSample, aois: Iterable[Aoi]) -> AoiHit | None:
    """Nearest AOI hit along the gaze ray; ties keep the earlier AOI."""
    best = None
    for a in aois:
        d = ray_box_entry(sample.origin, sample.direction, a.box)
        if d is not None and (best is None or d < best.distance):
            best = AoiHit(a.name, d, a.role)
    return best


@dataclass(frozen=True)
class GazePolicy:
    dwell_s: float = 0.5
    initial: Intent = Intent.WORKING
    idle_roles: frozenset = field(
        default_factory=lambda: frozenset({AoiRole.ROBOT_AREA, AoiRole.PARTS_TABLE})
    )
    no_hit_idle: bool = True

    def __post_init__(self):
        if not self.dwell_s >= 0:
            raise ValueError("dwell_s must be >= 0")
        object.__setattr__(self, "idle_roles", frozenset(AoiRole(r) for r in self.idle_roles))

    def evidence(self, hit: AoiHit | None) -> Intent:
        if hit is None:
            return Intent.IDLE if self.no_hit_idle else Intent.WORKING
        return Intent.IDLE if hit.role in self.idle_roles else Intent.WORKING


class GazeClassifier:
    """Streaming fold: current label, pending evidence and when it started."""

    def __init__(self, aois: Sequence[Aoi], policy: GazePolicy | None = None):
        validate_aois(aois)
        self.aois = tuple(aois)
        self.policy = policy or GazePolicy()
        self.reset()

    def reset(self) -> None:
        self.label = Intent(self.policy.initial)
        self.pending: Intent | None = None
        self.pending_since: float | None = None
        self.last_t: float | None = None

    def update(self, sample: GazeSample) -> Intent:
        if self.last_t is not None and not sample.t > self.last_t:
            raise GazeStreamError(f"gaze timestamp {sample.t!r} not after {self.last_t!r}")
        self.last_t = sample.t
        raw = self.policy.evidence(cast_ray(sample, self.aois))
        if raw == self.label:
            self.pending = None
            self.pending_since = None
        else:
            if raw != self.pending:
                self.pending = raw
                self.pending_since = sample.t
            if sample.t - self.pending_since >= self.policy.dwell_s - _EPS_T:
                self.label = raw
                self.pending = None
                self.pending_since = None
        return self.label


def classify_gaze(
    samples: Iterable[GazeSample], aois: Sequence[Aoi], policy: GazePolicy | None = None
) -> Iterator[tuple[float, Intent]]:
    """One (t, label) per input sample; raises GazeStreamError on out-of-order time."""
    clf = GazeClassifier(aois, policy)
    for s in samples:
        yield s.t, clf.update(s)
