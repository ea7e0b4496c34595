import time
from dataclasses import replace
from pathlib import Path

import pytest

from hrcsync.imu.io import load_weights, weights_bytes
from hrcsync.imu.synth import synth_dataset
from hrcsync.imu.training import TrainConfig, train
from hrcsync.sim.compare import compare
from hrcsync.sim.scenario import DATA_DIR, DEFAULT_SCENARIO, Activity, GazeProfile, load_scenario

SHIPPED_WEIGHTS = DATA_DIR / "imu_default.lstm"
SWEEP_SEEDS = range(20)

# one delivery followed by one synchronisation: a single wait per run
ONE_STEP_DOMAIN = """
(domain one_step
  (primitive grasp ?arm ?obj)
  (primitive release ?obj)
  (primitive move ?arm ?target)
  (primitive manipulate ?obj ?effect)
  (primitive wait ?intent)
  (primitive perceive ?channel)
  (task root)
  (task sync)
  (method fetch_seat
    :task (root)
    :subtasks ((move left (at seat)) (grasp left seat)
               (move left (pose human_table seat)) (release seat)
               (move left (pose home left)) (sync)))
  (method sync_on_idle
    :task (sync)
    :subtasks ((perceive $channel) (wait Idle))))
"""

IDLE_GAZE = GazeProfile({"robot_area": 0.7, "parts_table": 0.3})
WORK_GAZE = GazeProfile({"human_workspace": 1.0})


@pytest.fixture(scope="session")
def stool():
    return load_scenario()


@pytest.fixture(scope="session")
def stool_toml():
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(DEFAULT_SCENARIO.read_text())


@pytest.fixture(scope="session")
def model():
    return load_weights(SHIPPED_WEIGHTS)


def one_step(script, assemble_s=20.0, gaze=None, **overrides):
    """Single-wait scenario on the stool workspace."""
    acts = (
        Activity("idle_wait", 5.0, IDLE_GAZE),
        Activity("assemble", assemble_s, gaze or WORK_GAZE),
        Activity("idle_wait", 5.0, IDLE_GAZE),
    )
    s = replace(script, domain_text=ONE_STEP_DOMAIN, root="root", activities=acts)
    return s.with_overrides(**overrides)


@pytest.fixture(scope="session")
def trained_default():
    """The default training run (seed 0, 400 windows per class), timed."""
    t0 = time.perf_counter()
    data = synth_dataset(0, 400)
    params, curve = train(data, TrainConfig(seed=0))
    return {"params": params, "curve": curve, "seconds": time.perf_counter() - t0,
            "bytes": weights_bytes(params)}


@pytest.fixture(scope="session")
def sweep(stool, model):
    """Both channels over 20 seeds on the default script, logs kept, timed."""
    t0 = time.perf_counter()
    table = compare(stool, SWEEP_SEEDS, model, keep_logs=True)
    return {"table": table, "seconds": time.perf_counter() - t0}


@pytest.fixture
def shipped_weights_path() -> Path:
    return SHIPPED_WEIGHTS
