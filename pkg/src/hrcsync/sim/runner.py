"""Fixed-tick coupling of the scripted human, one intent channel and the executor.

Tick order at tick n (t = n/30): the human timeline advances and emits its
samples; if the robot is inside a wait, the active classifier consumes them
and the release counter updates; then the robot runs every action whose start
time has come. Inside a wait the robot is released once the classifier has
produced K consecutive Idle outputs (per tick for gaze, per window for IMU).

Each wait opens a fresh perception episode: the gaze classifier restarts at
Working, the IMU window buffer is emptied (cold start) and the counter is
zeroed.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..actions import Perceive, Wait
from ..formats import FormatError, check_header, header
from ..gaze import GazeClassifier, GazePolicy
from ..htn import Plan, execute_step
from ..htn.executor import RELEASED
from ..imu.frames import N_FEATURES, WINDOW, ImuFrame, WindowBuffer
from ..imu.lstm import LstmParams, classify_window, predict_proba
from ..world_types import Intent
from .human import RATE_HZ, HumanEmitter, HumanTimeline
from .scenario import ASSEMBLE, ScenarioError, ScenarioScript

TICK = 1.0 / RATE_HZ
LOG_KIND = "event-log"
SOURCES = ("robot", "human", "classifier")
ORACLE = "oracle"


class ChannelMismatch(ScenarioError):
    pass


@dataclass(frozen=True)
class Event:
    t: float
    source: str
    event: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "source": self.source, "event": self.event, "data": self.data},
                          separators=(",", ":"))


class EventLog:
    def __init__(self, events=()):
        self.events: list[Event] = []
        for e in events:
            self.append(e)

    def append(self, e: Event) -> None:
        if e.source not in SOURCES:
            raise ValueError(f"unknown event source {e.source!r}")
        if self.events and e.t < self.events[-1].t:
            raise ValueError(f"event time {e.t} before {self.events[-1].t}")
        self.events.append(e)

    def add(self, t: float, source: str, event: str, **data) -> None:
        self.append(Event(t, source, event, data))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of(self, event: str) -> list[Event]:
        return [e for e in self.events if e.event == event]

    def dumps(self) -> str:
        return "\n".join([header(LOG_KIND)] + [e.to_json() for e in self.events]) + "\n"

    @classmethod
    def loads(cls, text: str) -> "EventLog":
        lines = text.splitlines()
        if not lines:
            raise FormatError("empty event log")
        check_header(lines[0], LOG_KIND)
        out = []
        for no, line in enumerate(lines[1:], start=2):
            try:
                d = json.loads(line)
                out.append(Event(d["t"], d["source"], d["event"], d["data"]))
            except (ValueError, KeyError) as e:
                raise FormatError(f"bad event record: {e}", no) from None
        return cls(out)


@dataclass
class MetricsReport:
    channel: str
    seed: int
    idle: list[float]
    total_idle: float
    total_time: float
    latencies: list[float]
    complete: bool = True
    early_releases: int = 0
    wait_starts: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "seed": self.seed,
            "complete": self.complete,
            "waits": len(self.idle),
            "idle_s": self.idle,
            "total_idle_s": self.total_idle,
            "total_time_s": self.total_time,
            "latency_s": self.latencies,
            "early_releases": self.early_releases,
        }

    def to_csv(self) -> str:
        rows = ["wait,start_s,idle_s"]
        for i, (s, d) in enumerate(zip(self.wait_starts, self.idle), start=1):
            rows.append(f"{i},{s!r},{d!r}")
        rows.append(f"total,,{self.total_idle!r}")
        return "\n".join(rows) + "\n"

    def to_table(self) -> str:
        lines = [
            f"channel {self.channel}  seed {self.seed}  complete {str(self.complete).lower()}",
            f"{'wait':>5} {'start_s':>10} {'idle_s':>10}",
        ]
        for i, (s, d) in enumerate(zip(self.wait_starts, self.idle), start=1):
            lines.append(f"{i:>5} {s:>10.3f} {d:>10.3f}")
        lines.append(f"{'total idle':>16} {self.total_idle:>10.3f}")
        lines.append(f"{'assembly time':>16} {self.total_time:>10.3f}")
        lat = ", ".join(f"{x:.3f}" for x in self.latencies) or "none"
        lines.append(f"detection latency s: {lat}")
        return "\n".join(lines) + "\n"


class _GazeChannel:
    def __init__(self, script: ScenarioScript):
        self.clf = GazeClassifier(script.aois, GazePolicy(dwell_s=script.classifier.dwell_s))

    def reset(self):
        self.clf.reset()

    def step(self, n, gaze, feats, truth):
        return self.clf.update(gaze), True


class _ImuChannel:
    """Window classifier with batched look-ahead.

    Within a wait the human's future frames do not depend on the robot, so
    when a window falls due the next ``batch - 1`` windows are assembled from
    ``ahead(first, last)`` and classified in one pass. Every later push is
    compared with the predicted frame; a mismatch drops the cache.
    """

    def __init__(self, script: ScenarioScript, params: LstmParams, ahead, batch: int = 16):
        self.params = params
        self.threshold = script.classifier.threshold
        self.stride = script.classifier.stride
        self.buf = WindowBuffer(self.stride)
        self.ahead = ahead
        self.batch = batch
        self.reset()

    def reset(self):
        self.buf.reset()
        self.label = Intent.UNKNOWN
        self._probs: dict[int, float] = {}
        self._expect = None  # (first tick, predicted frames)

    def _check(self, n, feats):
        if self._expect is None:
            return
        first, rows = self._expect
        k = n - first
        if 0 <= k < len(rows) and not np.array_equal(rows[k], feats):
            self._probs.clear()
            self._expect = None

    def step(self, n, gaze, feats, truth):
        self._check(n, feats)
        w = self.buf.push(ImuFrame(n / RATE_HZ, feats))
        if w is None:
            return self.label, False
        prob = self._probs.pop(n, None)
        if prob is None:
            ends = [n + k * self.stride for k in range(self.batch)]
            future = self.ahead(n + 1, ends[-1])
            rows = np.concatenate([w.frames, future])
            wins = np.stack([rows[k * self.stride: k * self.stride + WINDOW] for k in range(self.batch)])
            probs = predict_proba(self.params, wins)
            prob = float(probs[0])
            self._probs = {e: float(p) for e, p in zip(ends[1:], probs[1:])}
            self._expect = (n + 1, future)
        self.label = classify_window(prob, self.threshold)
        return self.label, True


class _OracleChannel:
    """Ground-truth labels, for checking the metrics without classifier error."""

    def reset(self):
        pass

    def step(self, n, gaze, feats, truth):
        return truth, True


def _channel(script: ScenarioScript, params, classifier: str | None, ahead):
    if classifier == ORACLE:
        return _OracleChannel()
    if classifier not in (None, script.channel):
        raise ChannelMismatch(f"classifier {classifier!r} does not match scenario channel {script.channel!r}")
    if script.channel == "gaze":
        return _GazeChannel(script)
    if params is None:
        raise ScenarioError("the imu channel needs trained LSTM parameters")
    return _ImuChannel(script, params, ahead)


def run_scenario(
    script: ScenarioScript,
    params: LstmParams | None = None,
    *,
    classifier: str | None = None,
    plan: Plan | None = None,
) -> tuple[EventLog, MetricsReport]:
    """Simulate until the plan completes or ``script.timeout_s`` passes.

    ``classifier="oracle"`` swaps the channel's classifier for ground-truth
    labels. A timeout returns the partial log with ``complete=False``.
    """
    plan = plan if plan is not None else script.plan()
    script.check_plan(plan)
    config = script.world_config()
    state = script.initial_state()
    human = HumanTimeline(script.activities)
    emitter = HumanEmitter(script)
    lookahead = HumanEmitter(script)
    waits_started = 0

    def ahead(first: int, last: int) -> np.ndarray:
        tl = copy.copy(human)
        out = np.empty((last - first + 1, N_FEATURES))
        for k, m in enumerate(range(first, last + 1)):
            tl.advance(m, waits_started)
            out[k] = lookahead.imu_features(tl.state, m)
        return out

    chan = _channel(script, params, classifier, ahead)
    imu_needed = isinstance(chan, _ImuChannel)
    K = script.classifier.release_k
    log = EventLog()
    log.add(0.0, "human", "activity_start", index=0, kind=human.state.activity.kind)

    cursor = 0
    in_wait = False
    wait_start = 0.0
    idle_count = 0
    label = None
    idle, starts = [], []
    assemble_end: dict[int, float] = {}  # wait ordinal -> first idle tick time
    latencies, early = [], 0
    max_tick = math.floor(script.timeout_s * RATE_HZ + 1e-9)
    complete = False
    n = 0
    while n <= max_tick:
        t = n / RATE_HZ
        for ended, started in human.advance(n, waits_started):
            log.add(t, "human", "activity_end", index=ended.index, kind=ended.activity.kind)
            log.add(t, "human", "activity_start", index=started.index, kind=started.activity.kind)
            if ended.activity.kind == ASSEMBLE:
                assemble_end[human.assemble_ordinal(ended.index)] = t
        cur = human.state
        gaze = emitter.gaze(cur, n)
        feats = emitter.imu_features(cur, n)
        if not imu_needed:
            emitter.imu(cur, n)  # emitted every tick regardless of the active channel

        if in_wait:
            new_label, fresh = chan.step(n, gaze, feats, cur.truth)
            if fresh:
                idle_count = idle_count + 1 if new_label is Intent.IDLE else 0
            if new_label != label:
                log.add(t, "classifier", "label", label=new_label.value)
                label = new_label

        while cursor < len(plan) and state.time <= t + 1e-9:
            action = plan.actions[cursor]
            if state.time != t:
                state = replace(state, time=t)  # snap to the tick grid
            if isinstance(action, Wait):
                if not in_wait:
                    in_wait = True
                    waits_started += 1
                    wait_start = t
                    idle_count = 0
                    chan.reset()
                    label = None
                    starts.append(t)
                    log.add(t, "robot", "wait_start", index=cursor, wait=waits_started)
                    log.add(t, "classifier", "reset", channel=classifier or script.channel)
                percept = Intent.IDLE if idle_count >= K else None
                cursor, state, rec = execute_step(plan, cursor, state, percept, config)
                if rec.kind != RELEASED:
                    break
                in_wait = False
                d = t - wait_start
                idle.append(d)
                end = assemble_end.get(waits_started)
                if end is None:
                    early += 1
                else:
                    latencies.append(t - end)
                log.add(t, "robot", "wait_release", index=rec.index, wait=waits_started, idle_s=d)
            else:
                percept = label if isinstance(action, Perceive) and label in (Intent.WORKING, Intent.IDLE) else None
                cursor, state, rec = execute_step(plan, cursor, state, percept, config)
                log.add(t, "robot", "action", index=rec.index, action=action.name, args=action.args(),
                        t_end=rec.t_end)
        if cursor >= len(plan) and state.time <= t + 1e-9:
            complete = True
            log.add(t, "robot", "plan_complete")
            break
        n += 1

    if not complete:
        log.add(min(n, max_tick) / RATE_HZ, "robot", "timeout", cursor=cursor)
    report = MetricsReport(
        channel=classifier or script.channel,
        seed=script.seed,
        idle=idle,
        total_idle=math.fsum(idle),
        total_time=state.time if complete else min(n, max_tick) / RATE_HZ,
        latencies=latencies,
        complete=complete,
        early_releases=early,
        wait_starts=starts,
    )
    return log, report


def audit_log(log: EventLog) -> dict:
    """Recompute waits and detection latencies from a log alone.

    The j-th transition (end of the j-th assemble activity) is detected by
    the j-th wait release; a release that comes before its transition is
    counted as early instead of producing a latency.
    """
    idle, releases, transitions = [], [], []
    open_start = None
    for e in log:
        if e.event == "wait_start":
            open_start = e.t
        elif e.event == "wait_release":
            idle.append(e.t - open_start)
            releases.append(e.t)
            open_start = None
        elif e.event == "activity_end" and e.data["kind"] == ASSEMBLE:
            transitions.append(e.t)
    latencies, early = [], 0
    for j, r in enumerate(releases):
        if j < len(transitions) and transitions[j] <= r:
            latencies.append(r - transitions[j])
        else:
            early += 1
    return {"idle": idle, "total_idle": math.fsum(idle), "transitions": transitions,
            "latencies": latencies, "early_releases": early}


def gaze_latency_bound(dwell_s: float, k: int) -> float:
    return dwell_s + k / RATE_HZ + TICK


def imu_latency_bound(k: int, stride: int, window: int = 500) -> float:
    return (window + (k - 1) * stride) / RATE_HZ + TICK
