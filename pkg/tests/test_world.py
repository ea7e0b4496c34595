import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrcsync.actions import Grasp, Manipulate, Move, Perceive, Release, Wait
from hrcsync.world import (
    Availability,
    Characteristics,
    EndEffectorStatus,
    ObjectRecord,
    PreconditionViolation,
    UnknownObjectError,
    WorldConfig,
    WorldState,
    apply_effect,
    check_precondition,
    from_snapshot,
    to_snapshot,
)
from hrcsync.world_types import Box, Intent, Pose

ZONE = Box((0.0, -1.0, 0.0), (1.0, 1.0, 1.0))
DROP = Pose((0.5, 0.0, 0.5))
HOME_L = Pose((2.0, 0.5, 1.0))
HOME_R = Pose((2.0, -0.5, 1.0))


def leg(oid="leg_1", pos=(1.5, 1.0, 0.8)):
    return ObjectRecord(oid, Pose(pos), Characteristics("leg", True, (0.04, 0.04, 0.45)))


def small_state(objects=None, **kw):
    objects = objects if objects is not None else [
        leg(),
        ObjectRecord("screw_box", Pose((1.5, -1.0, 0.8)), Characteristics("screw_box", True, (0.1, 0.1, 0.05), 0)),
    ]
    return WorldState(
        time=0.0,
        effectors=kw.pop("effectors", [EndEffectorStatus("left", HOME_L), EndEffectorStatus("right", HOME_R)]),
        robot_pose=Pose((2.5, 0.0, 0.0)),
        human_pose=Pose((-0.2, 0.0, 1.6)),
        objects=objects,
        **kw,
    )


CFG = WorldConfig(delivery_zone=ZONE)


# -- value types ---------------------------------------------------------------


def test_pose_renormalises_small_quaternion_error():
    p = Pose((0, 0, 0), (1.0 + 1e-6, 0.0, 0.0, 0.0))
    assert abs(math.sqrt(sum(q * q for q in p.orientation)) - 1.0) <= 1e-9


def test_pose_rejects_far_from_unit_quaternion():
    with pytest.raises(ValueError):
        Pose((0, 0, 0), (2.0, 0.0, 0.0, 0.0))


def test_pose_rejects_non_finite_position():
    with pytest.raises(ValueError):
        Pose((0, math.nan, 0))


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.floats(0.995, 1.005))
def test_pose_norm_invariant(q, scale):
    n = math.sqrt(sum(x * x for x in q))
    if n < 0.1:
        return
    q = [scale * x / n for x in q]
    p = Pose((0, 0, 0), q)
    assert abs(math.sqrt(sum(x * x for x in p.orientation)) - 1.0) <= 1e-9


def test_extent_must_be_positive():
    with pytest.raises(ValueError):
        Characteristics("leg", True, (0.04, 0.0, 0.45))


def test_duplicate_holding_rejected():
    with pytest.raises(ValueError):
        small_state(effectors=[
            EndEffectorStatus("left", HOME_L, "holding", "leg_1"),
            EndEffectorStatus("right", HOME_R, "holding", "leg_1"),
        ])


def test_holding_unknown_object_rejected():
    with pytest.raises(ValueError):
        small_state(effectors=[EndEffectorStatus("left", HOME_L, "holding", "ghost")])


def test_delivered_must_be_subset():
    with pytest.raises(ValueError):
        small_state(delivered={"ghost"})


def test_object_ids_unique_by_key():
    s = small_state(objects=[leg(), leg()])
    assert list(s.objects) == ["leg_1"]


# -- effect rules ----------------------------------------------------------------


def test_grasp_sets_holding():
    s = small_state()
    s = apply_effect(s, Move(s.object("leg_1").pose, "left"), CFG)
    s = apply_effect(s, Grasp("leg_1", "left"), CFG)
    eff = s.effector("left")
    assert eff.availability is Availability.HOLDING and eff.held == "leg_1"


def test_release_without_holder_is_violation():
    with pytest.raises(PreconditionViolation, match="no effector holds leg_1"):
        apply_effect(small_state(), Release("leg_1"), CFG)


def test_unknown_object_id():
    with pytest.raises(UnknownObjectError):
        apply_effect(small_state(), Grasp("ghost", "left"), CFG)


def test_move_grasp_move_release_delivers():
    # hand-executed: move 5 s, grasp 2 s, move 5 s, release 1.5 s
    s0 = small_state()
    s = apply_effect(s0, Move(s0.object("leg_1").pose, "left"), CFG)
    s = apply_effect(s, Grasp("leg_1", "left"), CFG)
    s = apply_effect(s, Move(DROP, "left"), CFG)
    assert s.object("leg_1").pose == DROP  # carried with the arm
    s = apply_effect(s, Release("leg_1"), CFG)
    assert s.delivered == {"leg_1"}
    assert all(e.free for e in s.effectors)
    assert s.time == pytest.approx(13.5, abs=1e-12)
    assert s.object("leg_1").pose == DROP
    assert s0.delivered == frozenset() and s0.effector("left").free  # input untouched


def test_release_outside_zone_not_delivered():
    s = small_state()
    s = apply_effect(s, Move(s.object("leg_1").pose, "left"), CFG)
    s = apply_effect(s, Grasp("leg_1", "left"), CFG)
    s = apply_effect(s, Release("leg_1"), CFG)
    assert s.delivered == frozenset()


def test_grasp_out_of_reach():
    chk = check_precondition(small_state(), Grasp("leg_1", "left"), CFG)
    assert not chk and "out of reach" in chk.reason


def test_no_free_effector():
    s = small_state(
        objects=[leg(), leg("leg_2"), leg("leg_3")],
        effectors=[
            EndEffectorStatus("left", HOME_L, "holding", "leg_2"),
            EndEffectorStatus("right", HOME_R, "holding", "leg_3"),
        ],
    )
    chk = check_precondition(s, Grasp("leg_1"), CFG)
    assert not chk and chk.reason == "no free effector"


def test_wait_is_always_applicable():
    for intent in (Intent.IDLE, Intent.WORKING):
        assert check_precondition(small_state(), Wait(intent), CFG)


def test_decrement_empty_container():
    chk = check_precondition(small_state(), Manipulate("screw_box", "decrement"), CFG)
    assert not chk and chk.reason == "empty container"


def test_manipulate_count_and_fasten():
    s = apply_effect(small_state(), Manipulate("screw_box", "increment"), CFG)
    assert s.object("screw_box").characteristics.count == 1
    s = apply_effect(s, Manipulate("screw_box", "decrement"), CFG)
    assert s.object("screw_box").characteristics.count == 0
    s = apply_effect(s, Manipulate("leg_1", "fasten"), CFG)
    assert s.object("leg_1").characteristics.fastened
    with pytest.raises(PreconditionViolation, match="already fastened"):
        apply_effect(s, Manipulate("leg_1", "fasten"), CFG)
    assert not check_precondition(s, Manipulate("leg_1", "decrement"), CFG)


def test_perceive_updates_intent_wait_only_clock():
    s = small_state()
    p = apply_effect(s, Perceive("gaze"), CFG, percept=Intent.IDLE)
    assert p.human_intent is Intent.IDLE and p.time == 0.5
    w = apply_effect(p, Wait(), CFG)
    assert w.objects == p.objects and w.effectors == p.effectors and w.time == p.time


def test_durations_come_from_config():
    cfg = WorldConfig(durations={"move": 1.25}, delivery_zone=ZONE)
    assert apply_effect(small_state(), Move(DROP, "left"), cfg).time == 1.25
    with pytest.raises(ValueError):
        WorldConfig(durations={"teleport": 1.0})


def test_move_base():
    s = apply_effect(small_state(), Move(Pose((3.0, 0.0, 0.0))), CFG)
    assert s.robot_pose.position == (3.0, 0.0, 0.0)


# -- snapshots -------------------------------------------------------------------


def test_snapshot_round_trip_byte_exact():
    s = small_state()
    s = apply_effect(s, Move(s.object("leg_1").pose, "left"), CFG)
    s = apply_effect(s, Grasp("leg_1", "left"), CFG)
    line = to_snapshot(s)
    assert to_snapshot(from_snapshot(line)) == line
    assert from_snapshot(line) == s


def test_snapshot_field_order_is_fixed():
    line = to_snapshot(small_state())
    keys = ['"v"', '"time"', '"effectors"', '"robot_pose"', '"human_pose"', '"objects"',
            '"human_intent"', '"delivered"']
    positions = [line.index(k) for k in keys]
    assert positions == sorted(positions)
    assert line.startswith('{"v":1,"time":0.0,"effectors":[{"arm":"left","availability":"free","held":null,')


def test_snapshot_rejects_unknown_version():
    line = to_snapshot(small_state()).replace('"v":1', '"v":9', 1)
    with pytest.raises(ValueError):
        from_snapshot(line)


# -- properties over random legal sequences ------------------------------------------

OBJ_POS = {f"leg_{k}": (1.5, 0.2 * k - 0.5, 0.8) for k in range(1, 5)}


def _layout():
    objs = [leg(k, p) for k, p in OBJ_POS.items()]
    objs.append(ObjectRecord("screw_box", Pose((1.5, 1.2, 0.8)),
                             Characteristics("screw_box", True, (0.1, 0.1, 0.05), 2)))
    return small_state(objects=objs)


def _candidates(s):
    acts = [Wait(), Perceive("imu")]
    for oid, rec in s.objects.items():
        acts.append(Release(oid))
        acts.append(Manipulate(oid, "decrement"))
        for arm in ("left", "right"):
            acts.append(Grasp(oid, arm))
            acts.append(Move(rec.pose, arm))
    for arm in ("left", "right"):
        acts.append(Move(DROP, arm))
    return acts


def _random_run(choices):
    s = _layout()
    trace = [to_snapshot(s)]
    actions = []
    for c in choices:
        legal = [a for a in _candidates(s) if check_precondition(s, a, CFG)]
        a = legal[c % len(legal)]
        nxt = apply_effect(s, a, CFG)
        assert nxt.time >= s.time
        s = nxt
        actions.append(a)
        trace.append(to_snapshot(s))
    return s, actions, trace


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=40))
def test_random_legal_sequences(choices):
    s, actions, trace = _random_run(choices)
    ids = set(_layout().objects)
    assert set(s.objects) == ids  # conservation
    held = [e.held for e in s.effectors if e.held]
    assert len(held) == len(set(held))  # exclusivity
    assert s.delivered <= ids
    # replay is deterministic, byte for byte
    r = _layout()
    for a in actions:
        r = apply_effect(r, a, CFG)
    assert to_snapshot(r) == trace[-1]
