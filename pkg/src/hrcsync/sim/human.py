"""Scripted human: activity timeline plus per-tick gaze and IMU emission."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..gaze import AoiRole, GazeSample
from ..imu.frames import SENSORS, ImuSample
from ..imu.synth import MotionStream
from ..world_types import Intent
from .scenario import ASSEMBLE, Activity, ScenarioScript

RATE_HZ = 30
_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # golden-ratio step for the region sequence


@dataclass(frozen=True)
class ActivityState:
    index: int
    activity: Activity
    start_tick: int

    @property
    def truth(self) -> Intent:
        return Intent.WORKING if self.activity.kind == ASSEMBLE else Intent.IDLE


def segment_ticks(activity: Activity) -> int:
    return max(1, round(RATE_HZ / activity.gaze.switch_hz))


class HumanEmitter:
    """Deterministic per (seed, activity index, tick).

    Gaze holds one target per segment of ``30 / switch_hz`` ticks. The region
    of segment j is picked with a seeded golden-ratio sequence over the
    profile's cumulative fractions, so long-run time fractions match the
    profile closely; the AOI within the region and the target point inside
    its box are uniform draws. IMU frames come from the motion stream keyed by
    activity index, which restarts the oscillation model at every activity
    boundary on a continuous tick timeline.
    """

    def __init__(self, script: ScenarioScript, seed: int | None = None):
        self.script = script
        self.seed = script.seed if seed is None else seed
        self.head = tuple(script.head)
        self.by_role = {r: [a for a in script.aois if a.role is r] for r in AoiRole}
        self.motion = MotionStream(self.seed, script.synth)
        self._offset = {}
        self._target = (None, None)

    def _offset_for(self, index: int) -> float:
        off = self._offset.get(index)
        if off is None:
            off = float(np.random.default_rng([self.seed, 3, index]).random())
            self._offset[index] = off
        return off

    def region(self, state: ActivityState, segment: int) -> AoiRole:
        u = (self._offset_for(state.index) + segment * _PHI) % 1.0
        acc = 0.0
        frac = state.activity.gaze.fractions
        for role, p in frac.items():
            acc += p
            if u < acc:
                return role
        return next(r for r, p in reversed(frac.items()) if p > 0)

    def gaze_target(self, state: ActivityState, tick: int) -> tuple[str, tuple[float, float, float]]:
        seg = (tick - state.start_tick) // segment_ticks(state.activity)
        key = (state.index, seg)
        if self._target[0] == key:
            return self._target[1]
        role = self.region(state, seg)
        rng = np.random.default_rng([self.seed, 5, state.index, seg])
        options = self.by_role[role]
        aoi = options[int(rng.integers(len(options)))]
        lo, hi = np.array(aoi.box.lo), np.array(aoi.box.hi)
        point = tuple(float(x) for x in lo + rng.random(3) * (hi - lo))
        self._target = (key, (aoi.name, point))
        return aoi.name, point

    def gaze(self, state: ActivityState, tick: int) -> GazeSample:
        _, point = self.gaze_target(state, tick)
        return GazeSample.towards(tick / RATE_HZ, self.head, point)

    def imu_features(self, state: ActivityState, tick: int) -> np.ndarray:
        return self.motion.frame(tick, state.activity.motion, state.index, state.start_tick)

    def imu(self, state: ActivityState, tick: int) -> tuple[ImuSample, ...]:
        return split_frame(tick / RATE_HZ, self.imu_features(state, tick))

    def emit(self, state: ActivityState, tick: int) -> tuple[GazeSample, tuple[ImuSample, ...]]:
        return self.gaze(state, tick), self.imu(state, tick)


def split_frame(t: float, features: np.ndarray) -> tuple[ImuSample, ...]:
    vals = features.tolist()
    out = []
    for k, s in enumerate(SENSORS):
        v = vals[9 * k: 9 * k + 9]
        out.append(ImuSample(t, s, tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9])))
    return tuple(out)


def emit_human(state: ActivityState, tick: int, seed: int, script: ScenarioScript):
    """One gaze sample and four IMU samples for ``tick`` under ``state``."""
    return HumanEmitter(script, seed).emit(state, tick)


class HumanTimeline:
    """Which activity the human is in, tick by tick.

    An assemble activity starts on the first tick after the robot begins the
    matching wait (the human works on the parts just delivered); if the human
    is still busy with the previous step it starts as soon as the trailing
    idle_wait has had one tick. It ends after its scripted duration, and the
    following idle_wait lasts until the next trigger. Idle_wait durations are
    nominal and only used by ``fixed_schedule``.
    """

    def __init__(self, activities):
        self.activities = tuple(activities)
        self.state = ActivityState(0, self.activities[0], 0)

    def assemble_ordinal(self, index: int) -> int:
        return sum(a.kind == ASSEMBLE for a in self.activities[: index + 1])

    def advance(self, tick: int, triggers: int) -> list[tuple[ActivityState, ActivityState]]:
        """Apply at most one transition at ``tick``; returns [(ended, started)]."""
        cur = self.state
        nxt_i = cur.index + 1
        if nxt_i >= len(self.activities):
            return []
        nxt = self.activities[nxt_i]
        if cur.activity.kind == ASSEMBLE:
            due = tick >= cur.start_tick + max(1, round(cur.activity.duration * RATE_HZ))
        else:
            due = nxt.kind == ASSEMBLE and triggers >= self.assemble_ordinal(nxt_i) and tick > cur.start_tick
        if not due:
            return []
        self.state = ActivityState(nxt_i, nxt, tick)
        return [(cur, self.state)]


def fixed_schedule(activities) -> list[ActivityState]:
    """Open-loop timeline using every scripted duration as-is."""
    out, tick = [], 0
    for i, a in enumerate(activities):
        out.append(ActivityState(i, a, tick))
        tick += max(1, round(a.duration * RATE_HZ))
    return out
