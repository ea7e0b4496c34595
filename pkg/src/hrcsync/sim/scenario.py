"""Scenario files: strict TOML loading into a validated ``ScenarioScript``.

A scenario bundles the planning domain, the workspace (AOIs, objects, named
poses), robot action durations, classifier settings and the scripted human
activities. Unknown keys anywhere are an error.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .. import _frozen  # noqa: F401  (makes MappingProxyType picklable)
from ..actions import Perceive, Wait
from ..gaze import Aoi, AoiRole, validate_aois
from ..htn import Domain, Plan, decompose, load_domain
from ..imu.synth import IDLE, WORKING, SynthConfig
from ..world import (
    Box,
    Characteristics,
    EndEffectorStatus,
    ObjectRecord,
    Pose,
    WorldConfig,
    WorldState,
)

FORMAT = "hrcsync-scenario v1"
CHANNELS = ("gaze", "imu")
ASSEMBLE = "assemble"
IDLE_WAIT = "idle_wait"
FRACTION_TOL = 1e-9
DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_SCENARIO = DATA_DIR / "stool.toml"


class ScenarioError(ValueError):
    pass


class ScenarioParseError(ScenarioError):
    """The file is not valid TOML."""


def _strict(d: Mapping, where: str, required=(), optional=()) -> None:
    if not isinstance(d, Mapping):
        raise ScenarioError(f"{where}: expected a table")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ScenarioError(f"{where}: missing keys {missing}")


def _vec3(v, where: str) -> tuple[float, float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ScenarioError(f"{where}: expected 3 numbers")
    out = tuple(float(x) for x in v)
    if not all(math.isfinite(x) for x in out):
        raise ScenarioError(f"{where}: non-finite value")
    return out


@dataclass(frozen=True)
class GazeProfile:
    fractions: Mapping[AoiRole, float]
    switch_hz: float = 2.0

    def __post_init__(self):
        fr = {AoiRole(k): float(v) for k, v in dict(self.fractions).items()}
        if any(v < 0 for v in fr.values()):
            raise ScenarioError("gaze fractions must be >= 0")
        if abs(sum(fr.values()) - 1.0) > FRACTION_TOL:
            raise ScenarioError(f"gaze fractions sum to {sum(fr.values())!r}, not 1")
        if not self.switch_hz > 0:
            raise ScenarioError("switch_hz must be > 0")
        object.__setattr__(self, "fractions", MappingProxyType(dict(sorted(fr.items(), key=lambda kv: kv[0].value))))


@dataclass(frozen=True)
class Activity:
    kind: str
    duration: float
    gaze: GazeProfile
    motion: str = ""

    def __post_init__(self):
        if self.kind not in (ASSEMBLE, IDLE_WAIT):
            raise ScenarioError(f"unknown activity kind {self.kind!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ScenarioError("activity durations must be > 0")
        motion = self.motion or (WORKING if self.kind == ASSEMBLE else IDLE)
        if motion not in (WORKING, IDLE):
            raise ScenarioError(f"unknown motion profile {motion!r}")
        object.__setattr__(self, "motion", motion)


@dataclass(frozen=True)
class ClassifierSettings:
    dwell_s: float = 0.5
    release_k: int = 3
    stride: int = 15
    threshold: float = 0.5
    weights: str | None = None

    def __post_init__(self):
        if not self.dwell_s >= 0:
            raise ScenarioError("dwell_s must be >= 0")
        if self.release_k < 1:
            raise ScenarioError("release_k must be >= 1")
        if self.stride < 1:
            raise ScenarioError("stride must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ScenarioError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    domain_text: str
    root: str
    activities: tuple[Activity, ...]
    aois: tuple[Aoi, ...]
    objects: tuple[ObjectRecord, ...]
    named_poses: Mapping[str, Pose]
    robot_base: Pose
    head: tuple[float, float, float]
    durations: Mapping[str, float] = field(default_factory=dict)
    grasp_reach: float = 0.05
    channel: str = "gaze"
    seed: int = 0
    timeout_s: float = 3600.0
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    synth: SynthConfig = field(default_factory=SynthConfig)
    source: str = ""  # path the script was loaded from, for reports

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))
        object.__setattr__(self, "aois", tuple(self.aois))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "named_poses", MappingProxyType(dict(self.named_poses)))
        object.__setattr__(self, "durations", MappingProxyType(dict(self.durations)))
        if self.channel not in CHANNELS:
            raise ScenarioError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if not self.timeout_s > 0:
            raise ScenarioError("timeout_s must be > 0")
        try:
            validate_aois(self.aois)
        except ValueError as e:
            raise ScenarioError(str(e)) from None
        roles = {a.role for a in self.aois}
        acts = self.activities
        if not acts or acts[0].kind != IDLE_WAIT:
            raise ScenarioError("the activity script must start with idle_wait")
        for i, a in enumerate(acts):
            if a.kind == ASSEMBLE and (i + 1 >= len(acts) or acts[i + 1].kind != IDLE_WAIT):
                raise ScenarioError(f"activity {i}: every assemble must be followed by an idle_wait")
            missing = set(a.gaze.fractions) - roles
            if missing:
                raise ScenarioError(f"activity {i}: gaze profile names roles without AOIs: {sorted(r.value for r in missing)}")
        for k in ("home/left", "home/right"):
            if k not in self.named_poses:
                raise ScenarioError(f"named pose {k!r} is required (arm start pose)")

    @property
    def n_assemble(self) -> int:
        return sum(a.kind == ASSEMBLE for a in self.activities)

    @property
    def workspace(self) -> Aoi:
        return next(a for a in self.aois if a.role is AoiRole.HUMAN_WORKSPACE)

    def domain(self) -> Domain:
        return load_domain(self.domain_text)

    def world_config(self) -> WorldConfig:
        return WorldConfig(
            durations=dict(self.durations),
            delivery_zone=self.workspace.box,
            named_poses=self.named_poses,
            grasp_reach=self.grasp_reach,
        )

    def initial_state(self) -> WorldState:
        effectors = [EndEffectorStatus(arm, self.named_poses[f"home/{arm}"]) for arm in ("left", "right")]
        return WorldState(
            time=0.0,
            effectors=effectors,
            robot_pose=self.robot_base,
            human_pose=Pose(self.head),
            objects=self.objects,
        )

    def plan(self) -> Plan:
        return decompose(self.root, self.initial_state(), self.domain(), self.world_config(), channel=self.channel)

    def check_plan(self, plan: Plan) -> None:
        """Assemble steps must pair one-to-one with the plan's waits."""
        n_wait = sum(isinstance(a, Wait) for a in plan.actions)
        if n_wait != self.n_assemble:
            raise ScenarioError(f"script has {self.n_assemble} assemble activities but the plan has {n_wait} waits")
        for a in plan.actions:
            if isinstance(a, Perceive) and a.channel != self.channel:
                raise ScenarioError(f"plan perceives on {a.channel!r} but the run uses channel {self.channel!r}")

    def with_overrides(self, **kw) -> "ScenarioScript":
        """Scenario with top-level or classifier fields replaced; None values are ignored."""
        kw = {k: v for k, v in kw.items() if v is not None}
        clf_keys = {"dwell_s", "release_k", "stride", "threshold", "weights"}
        clf = {k: kw.pop(k) for k in list(kw) if k in clf_keys}
        unknown = set(kw) - {"channel", "seed", "timeout_s"}
        if unknown:
            raise ScenarioError(f"unknown overrides {sorted(unknown)}")
        return replace(self, classifier=replace(self.classifier, **clf), **kw)

    def resolved(self) -> dict:
        """The run-relevant configuration, as embedded in reports."""
        c = self.classifier
        return {
            "scenario": self.name,
            "source": self.source,
            "channel": self.channel,
            "seed": self.seed,
            "timeout_s": self.timeout_s,
            "dwell_s": c.dwell_s,
            "release_k": c.release_k,
            "stride": c.stride,
            "threshold": c.threshold,
            "weights": c.weights,
            "durations": dict(self.world_config().durations),
            "activities": [[a.kind, a.duration] for a in self.activities],
        }


_TOP = ("format", "name", "domain", "root", "channel", "seed", "timeout_s", "durations",
        "classifier", "robot", "human", "aoi", "object", "poses", "activity", "synth")


def parse_scenario(doc: Mapping, base_dir: Path | None = None, source: str = "") -> ScenarioScript:
    _strict(doc, "scenario", required=("format", "domain", "root", "aoi", "object", "poses", "activity"),
            optional=_TOP)
    if doc["format"] != FORMAT:
        raise ScenarioError(f"unsupported scenario format {doc['format']!r} (expected {FORMAT!r})")
    base_dir = base_dir or DATA_DIR
    dom_path = base_dir / doc["domain"]
    try:
        domain_text = dom_path.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read domain file {dom_path}: {e}") from None

    durations = doc.get("durations", {})
    _strict(durations, "durations", optional=("grasp", "release", "move", "manipulate", "wait", "perceive"))

    clf = doc.get("classifier", {})
    _strict(clf, "classifier", optional=("dwell_s", "release_k", "stride", "threshold", "weights"))
    clf = dict(clf)
    if clf.get("weights"):
        clf["weights"] = str((base_dir / clf["weights"]).resolve())

    robot = doc.get("robot", {})
    _strict(robot, "robot", optional=("base", "grasp_reach"))
    human = doc.get("human", {})
    _strict(human, "human", optional=("head",))

    aois = []
    for i, a in enumerate(doc["aoi"]):
        _strict(a, f"aoi[{i}]", required=("name", "role", "lo", "hi"))
        try:
            aois.append(Aoi(a["name"], Box(_vec3(a["lo"], f"aoi[{i}].lo"), _vec3(a["hi"], f"aoi[{i}].hi")), a["role"]))
        except ValueError as e:
            raise ScenarioError(f"aoi[{i}]: {e}") from None

    objects = []
    for i, o in enumerate(doc["object"]):
        _strict(o, f"object[{i}]", required=("id", "kind", "position", "extent"), optional=("graspable", "count"))
        try:
            ch = Characteristics(o["kind"], bool(o.get("graspable", True)), _vec3(o["extent"], f"object[{i}].extent"),
                                 o.get("count"))
        except ValueError as e:
            raise ScenarioError(f"object[{i}]: {e}") from None
        objects.append(ObjectRecord(o["id"], Pose(_vec3(o["position"], f"object[{i}].position")), ch))
    ids = [o.id for o in objects]
    if len(set(ids)) != len(ids):
        raise ScenarioError("object ids must be unique")

    poses = {k: Pose(_vec3(v, f"poses.{k}")) for k, v in doc["poses"].items()}

    acts = []
    for i, a in enumerate(doc["activity"]):
        _strict(a, f"activity[{i}]", required=("kind", "duration", "gaze"), optional=("switch_hz", "motion"))
        try:
            prof = GazeProfile(a["gaze"], float(a.get("switch_hz", 2.0)))
        except ValueError as e:
            raise ScenarioError(f"activity[{i}]: {e}") from None
        acts.append(Activity(a["kind"], float(a["duration"]), prof, a.get("motion", "")))

    try:
        synth = SynthConfig.from_dict(doc.get("synth", {}))
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"synth: {e}") from None

    return ScenarioScript(
        name=doc.get("name", "scenario"),
        domain_text=domain_text,
        root=doc["root"],
        activities=acts,
        aois=aois,
        objects=objects,
        named_poses=poses,
        robot_base=Pose(_vec3(robot.get("base", [0.0, 0.0, 0.0]), "robot.base")),
        head=_vec3(human.get("head", [0.0, 0.0, 1.6]), "human.head"),
        durations=durations,
        grasp_reach=float(robot.get("grasp_reach", 0.05)),
        channel=doc.get("channel", "gaze"),
        seed=int(doc.get("seed", 0)),
        timeout_s=float(doc.get("timeout_s", 3600.0)),
        classifier=ClassifierSettings(**clf),
        synth=synth,
        source=source,
    )


def load_scenario(path=None, *, check: bool = True, **overrides) -> ScenarioScript:
    """Load and validate a scenario file (the shipped stool scenario by default).

    With ``check`` the plan is decomposed once to verify the assemble/wait
    pairing; domain and planning errors propagate with their own types.
    """
    path = Path(path) if path is not None else DEFAULT_SCENARIO
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ScenarioParseError(f"{path}: {e}") from None
    script = parse_scenario(doc, path.resolve().parent, str(path)).with_overrides(**overrides)
    if check:
        script.check_plan(script.plan())
    return script
