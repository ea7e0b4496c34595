import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrcsync.formats import FormatError, read_imu_trace, write_imu_trace
from hrcsync.imu.frames import (
    AXES,
    N_FEATURES,
    SENSORS,
    WINDOW,
    GapError,
    ImuFrame,
    ImuSample,
    WindowBuffer,
    assemble_frames,
    expected_window_count,
    window_stream,
)


def frames(n, t0=0.0, skip=()):
    out = []
    for k in range(n):
        if k in skip:
            continue
        out.append(ImuFrame(t0 + k / 30.0, np.full(N_FEATURES, float(k))))
    return out


def enumerate_windows(n, stride, size=WINDOW):
    # every end index e with e >= size and (e - size) % stride == 0
    return [e for e in range(1, n + 1) if e >= size and (e - size) % stride == 0]


def test_layout_is_sensor_then_axis():
    assert N_FEATURES == 36 == len(SENSORS) * len(AXES)
    s = [ImuSample(0.0, name, (k, k + .1, k + .2), (k + .3, k + .4, k + .5), (k + .6, k + .7, k + .8))
         for k, name in enumerate(SENSORS)]
    (fr,) = assemble_frames(s)
    assert fr.features[9] == 1.0 and fr.features[9 * 3 + 8] == pytest.approx(3.8)


@pytest.mark.parametrize("n,expected", [(500, 1), (1100, 41), (499, 0)])
def test_window_counts(n, expected):
    ws = list(window_stream(frames(n), 15))
    assert len(ws) == expected == len(enumerate_windows(n, 15))
    assert all(w.frames.shape == (WINDOW, N_FEATURES) for w in ws)


def test_windows_are_contiguous_and_strided():
    ws = list(window_stream(frames(560), 15))
    starts = [w.frames[0, 0] for w in ws]
    assert starts == [0.0, 15.0, 30.0, 45.0, 60.0]
    for w in ws:
        assert np.array_equal(w.frames[:, 0], np.arange(w.frames[0, 0], w.frames[0, 0] + WINDOW))


ALL_FRAMES = frames(1300)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1300), st.integers(1, 60))
def test_window_count_formula(n, stride):
    got = sum(1 for _ in window_stream(ALL_FRAMES[:n], stride))
    assert got == expected_window_count(n, stride) == len(enumerate_windows(n, stride))
    if n >= WINDOW:
        assert got == (n - WINDOW) // stride + 1


def test_gap_names_timestamp():
    with pytest.raises(GapError) as e:
        list(window_stream(frames(20, skip={10}), 15))
    assert e.value.t == pytest.approx(11 / 30.0)


def test_stride_must_be_positive():
    with pytest.raises(ValueError):
        WindowBuffer(0)


def test_missing_sensor_drops_tick_and_gaps():
    samples = []
    for k in range(5):
        for s in SENSORS:
            if k == 2 and s == "left_hand":
                continue
            samples.append(ImuSample(k / 30.0, s, (0, 0, 9.81), (0, 0, 0), (20, 0, -40)))
    fr = list(assemble_frames(samples))
    assert [round(f.t * 30) for f in fr] == [0, 1, 3, 4]
    with pytest.raises(GapError):
        list(window_stream(fr, 1))


def test_sample_validation():
    with pytest.raises(ValueError):
        ImuSample(0.0, "left_knee", (0, 0, 0), (0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        ImuSample(0.0, "left_hand", (0, math.inf, 0), (0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        ImuFrame(0.0, np.zeros(35))


def test_imu_trace_round_trip():
    samples = [ImuSample(k / 30.0, s, (0.1 * k, 0, 9.81), (0, 0.01, 0), (20, 0, -40))
               for k in range(3) for s in SENSORS]
    buf = io.StringIO()
    write_imu_trace(buf, samples)
    assert list(read_imu_trace(io.StringIO(buf.getvalue()))) == samples


def test_trace_rejects_unknown_version():
    with pytest.raises(FormatError):
        list(read_imu_trace(io.StringIO("# hrcsync imu-trace v2\n")))
    with pytest.raises(FormatError):
        list(read_imu_trace(io.StringIO("# hrcsync gaze-trace v1\n")))
