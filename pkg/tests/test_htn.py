import json
import re
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrcsync.actions import Grasp, Move, Perceive, Release, Wait, action_from_json
from hrcsync.htn import (
    CompoundTask,
    DepthLimitExceeded,
    DomainParseError,
    DomainValidationError,
    NoApplicableMethod,
    decompose,
    execute_step,
    load_domain,
    load_domain_file,
)
from hrcsync.htn.executor import BLOCKED, RELEASED
from hrcsync.sim.scenario import DATA_DIR
from hrcsync.world import ObjectRecord, apply_effect
from hrcsync.world_types import Intent, Pose

HEAD = """(domain t
  (primitive grasp ?arm ?obj) (primitive release ?obj) (primitive move ?arm ?target)
  (primitive manipulate ?obj ?effect) (primitive wait ?intent) (primitive perceive ?channel)
"""


def dom(body):
    return load_domain(HEAD + body + ")")


# -- loading -------------------------------------------------------------------


def test_shipped_domain_matches_its_header():
    text = (DATA_DIR / "stool.htn").read_text()
    m = re.search(r"contents: (\d+) primitive schemata, (\d+) compound tasks, (\d+) methods", text)
    n_prim, n_task, n_meth = map(int, m.groups())
    d = load_domain_file(DATA_DIR / "stool.htn")
    assert (len(d.primitives), len(d.tasks), len(d.methods)) == (n_prim, n_task, n_meth)
    assert d.summary() == f"domain stool: {n_task} tasks, {n_meth} methods, {n_prim} primitive schemata"


def test_empty_file_is_parse_error():
    with pytest.raises(DomainParseError) as e:
        load_domain("  ; only a comment\n")
    assert (e.value.line, e.value.col) == (1, 1)


def test_parse_error_reports_position():
    with pytest.raises(DomainParseError) as e:
        load_domain("(domain x\n  (task a)\n  (method m :task (a) :subtasks ((a))\n")
    assert e.value.line == 3


def test_undeclared_task_names_method():
    with pytest.raises(DomainValidationError) as e:
        dom("(task a) (method m1 :task (a) :subtasks ((b)))")
    assert e.value.method == "m1"


def test_empty_subtasks_rejected_at_load():
    with pytest.raises(DomainValidationError, match="empty subtask list"):
        dom("(task a) (method m1 :task (a) :subtasks ())")


def test_arity_checked():
    with pytest.raises(DomainValidationError, match="takes 1 arguments"):
        dom("(task a) (method m1 :task (a) :subtasks ((release x y)))")


def test_unknown_predicate():
    with pytest.raises(DomainValidationError, match="unknown predicate"):
        dom("(task a) (method m1 :task (a) :pre ((shiny x)) :subtasks ((wait Idle)))")


def test_unbound_variable():
    with pytest.raises(DomainValidationError, match="unbound variable"):
        dom("(task a) (method m1 :task (a) :subtasks ((release ?x)))")


def test_task_without_method():
    with pytest.raises(DomainValidationError, match="no decomposition method"):
        dom("(task a) (task b) (method m1 :task (a) :subtasks ((wait Idle)))")


def test_cycle_without_primitive_rejected():
    with pytest.raises(DomainValidationError, match="cycle"):
        dom("(task a) (task b) (method m1 :task (a) :subtasks ((b))) (method m2 :task (b) :subtasks ((a)))")


def test_cycle_after_primitive_is_allowed_but_depth_limited(stool):
    d = dom("(task a) (method m1 :task (a) :subtasks ((perceive gaze) (a)))")
    with pytest.raises(DepthLimitExceeded):
        decompose("a", stool.initial_state(), d, stool.world_config(), depth_limit=10)


# -- decomposition ---------------------------------------------------------------


def test_pick_and_place_leg_1(stool):
    # hand-applied: leg_1 lies at y > 0 (left of the robot), so
    # pick_and_place_left: move to it, grasp, move to its drop pose, release, go home
    s0 = stool.initial_state()
    cfg = stool.world_config()
    plan = decompose(CompoundTask("pick_and_place", ("leg_1", "human_table")), s0, stool.domain(), cfg)
    poses = stool.named_poses
    assert plan.actions == [
        Move(s0.object("leg_1").pose, "left"),
        Grasp("leg_1", "left"),
        Move(poses["human_table/leg_1"], "left"),
        Release("leg_1"),
        Move(poses["home/left"], "left"),
    ]
    assert all(p[-1].endswith("pick_and_place_left") for p in plan.provenance)


def test_full_plan_counts(stool, stool_toml):
    plan = stool.plan()
    deliverable = [o for o in stool_toml["object"] if o.get("graspable", True)]
    n_assemble = sum(a["kind"] == "assemble" for a in stool_toml["activity"])
    assert plan.count("release") == len(deliverable) == 9
    assert plan.count("wait") == n_assemble == 5
    assert plan.count("perceive") == 5
    # one perceive right before every wait
    for i, a in enumerate(plan.actions):
        if isinstance(a, Wait):
            assert isinstance(plan.actions[i - 1], Perceive)
    assert len(plan.provenance) == len(plan.actions)


def test_perceive_channel_follows_context(stool):
    plan = decompose(stool.root, stool.initial_state(), stool.domain(), stool.world_config(), channel="imu")
    assert {a.channel for a in plan.actions if isinstance(a, Perceive)} == {"imu"}


def test_decompose_deterministic(stool):
    a = stool.plan()
    b = stool.plan()
    assert a.dump() == b.dump()


def test_no_applicable_method_reports_task(stool):
    s = stool.initial_state()
    objs = {k: v for k, v in s.objects.items() if k != "seat"}
    with pytest.raises(NoApplicableMethod, match="assemble_stool"):
        decompose(stool.root, replace(s, objects=objs), stool.domain(), stool.world_config())


def test_methods_tried_in_order_until_one_applies(stool):
    # with the left arm busy, pick_and_place_left fails its precondition and
    # pick_and_place_right needs a right-side part: leg_1 has no option, leg_3 does
    s = stool.initial_state()
    busy = replace(s.effector("left"), availability="holding", held="leg_2")
    s = replace(s, effectors=(busy, s.effector("right")))
    with pytest.raises(NoApplicableMethod):
        decompose(CompoundTask("pick_and_place", ("leg_1", "human_table")), s, stool.domain(), stool.world_config())
    plan = decompose(CompoundTask("pick_and_place", ("leg_3", "human_table")), s, stool.domain(), stool.world_config())
    assert Grasp("leg_3", "right") in plan.actions


def test_plan_dump_round_trip(stool):
    plan = stool.plan()
    lines = plan.dump().splitlines()
    assert lines[0] == "# hrcsync plan v1"
    recs = [json.loads(x) for x in lines[1:]]
    assert [r["i"] for r in recs] == list(range(len(plan)))
    assert [action_from_json(r["action"], r["args"]) for r in recs] == plan.actions


# -- execution ---------------------------------------------------------------------


def test_wait_blocks_on_working(stool):
    plan = stool.plan()
    i = next(k for k, a in enumerate(plan.actions) if isinstance(a, Wait))
    s = stool.initial_state()
    cur, s2, rec = execute_step(plan, i, s, Intent.WORKING, stool.world_config())
    assert cur == i and rec.kind == BLOCKED
    assert s2.time == pytest.approx(s.time + 1 / 30, abs=1e-12)
    cur, s3, rec = execute_step(plan, i, s, Intent.IDLE, stool.world_config())
    assert cur == i + 1 and rec.kind == RELEASED


def test_cursor_out_of_bounds(stool):
    with pytest.raises(IndexError):
        execute_step(stool.plan(), 999, stool.initial_state())


def _run(plan, state, cfg, percept_fn, max_steps=10_000):
    cursor = 0
    for _ in range(max_steps):
        if cursor >= len(plan):
            return cursor, state
        cursor, state, _ = execute_step(plan, cursor, state, percept_fn(cursor), cfg)
    return cursor, state


def test_always_idle_reaches_end(stool):
    plan = stool.plan()
    cur, s = _run(plan, stool.initial_state(), stool.world_config(), lambda c: Intent.IDLE)
    assert cur == len(plan)
    deliverable = {k for k, r in s.objects.items() if r.characteristics.graspable}
    assert s.delivered == deliverable
    assert all(e.free for e in s.effectors)


def test_never_idle_stalls_at_first_wait(stool):
    plan = stool.plan()
    first = next(k for k, a in enumerate(plan.actions) if isinstance(a, Wait))
    cur, _ = _run(plan, stool.initial_state(), stool.world_config(), lambda c: Intent.WORKING, 2000)
    assert cur == first


def test_execute_propagates_divergence(stool):
    plan = stool.plan()
    i = next(k for k, a in enumerate(plan.actions) if isinstance(a, Release))
    with pytest.raises(Exception, match="no effector holds"):
        execute_step(plan, i, stool.initial_state(), None, stool.world_config())


# -- plan soundness over randomised layouts -------------------------------------------

SLOTS = [(x, y) for x in (0.75, 1.0, 1.25) for y in (1.0, 1.3, 1.55)]


@settings(max_examples=25, deadline=None)
@given(st.permutations(range(18)))
def test_plan_sound_for_random_layouts(stool, perm):
    # every part lands on some slot of either parts table; side follows y
    slots = [(x, y) for x, y in SLOTS] + [(x, -y) for x, y in SLOTS]
    s0 = stool.initial_state()
    objs = []
    for k, (oid, rec) in enumerate(sorted(s0.objects.items())):
        x, y = slots[perm[k]]
        objs.append(ObjectRecord(oid, Pose((x, y, 0.8)), rec.characteristics))
    s0 = replace(s0, objects=objs)
    cfg = stool.world_config()
    plan = decompose(stool.root, s0, stool.domain(), cfg)
    s = s0
    for a in plan.actions:
        s = apply_effect(s, a, cfg, percept=Intent.IDLE)
    assert s.delivered == set(s.objects)  # the handover pose lies inside the workspace too
    assert plan.count("release") == 9
