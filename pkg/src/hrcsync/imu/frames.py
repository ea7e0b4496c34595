"""IMU samples, 36-feature frames and sliding windows.

Feature ordering is sensor-major: for each sensor in ``SENSORS`` order the
nine values accel x/y/z, gyro x/y/z, mag x/y/z. Feature ``k`` therefore
belongs to sensor ``k // 9`` and axis ``AXES[k % 9]``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ..world_types import Intent

SENSORS = ("left_wrist", "right_wrist", "left_hand", "right_hand")
AXES = ("ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz")
N_FEATURES = len(SENSORS) * len(AXES)
RATE_HZ = 30.0
WINDOW = 500
DEFAULT_STRIDE = 15
ACCEL_FEATURES = tuple(s * 9 + a for s in range(len(SENSORS)) for a in range(3))


class GapError(ValueError):
    """The frame timeline skipped more than one tick."""

    def __init__(self, t: float, prev: float):
        super().__init__(f"frame gap before t={t!r} (previous frame at t={prev!r})")
        self.t = t
        self.prev = prev


@dataclass(frozen=True)
class ImuSample:
    t: float
    sensor: str
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    mag: tuple[float, float, float]

    def __post_init__(self):
        if self.sensor not in SENSORS:
            raise ValueError(f"unknown sensor {self.sensor!r}")
        vals = (self.t, *self.accel, *self.gyro, *self.mag)
        if len(vals) != 10 or not all(math.isfinite(v) for v in vals):
            raise ValueError(f"IMU sample must hold 9 finite values, got {vals[1:]}")

    @property
    def values(self) -> tuple[float, ...]:
        return (*self.accel, *self.gyro, *self.mag)


@dataclass(frozen=True, eq=False)
class ImuFrame:
    t: float
    features: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float)
        if f.shape != (N_FEATURES,):
            raise ValueError(f"frame needs exactly {N_FEATURES} features, got shape {f.shape}")
        object.__setattr__(self, "features", f)


@dataclass(frozen=True, eq=False)
class ImuWindow:
    frames: np.ndarray  # (WINDOW, N_FEATURES)
    start: float
    label: Intent | None = None

    def __post_init__(self):
        if np.shape(self.frames) != (WINDOW, N_FEATURES):
            raise ValueError(f"window must be {WINDOW}x{N_FEATURES}, got {np.shape(self.frames)}")


def assemble_frames(samples: Iterable[ImuSample], tick: float = 1.0 / RATE_HZ) -> Iterator[ImuFrame]:
    """Group samples by tick and emit a frame once all four sensors reported.

    Ticks with a missing sensor are dropped; the resulting hole surfaces
    later as a ``GapError`` when windowing.
    """
    pending: dict[str, ImuSample] = {}
    key = None
    for s in samples:
        k = round(s.t / tick)
        if key is not None and k != key:
            if len(pending) == len(SENSORS):
                yield _frame(pending)
            pending = {}
        key = k
        pending[s.sensor] = s
    if pending and len(pending) == len(SENSORS):
        yield _frame(pending)


def _frame(pending: dict) -> ImuFrame:
    t = pending[SENSORS[0]].t
    return ImuFrame(t, np.concatenate([pending[s].values for s in SENSORS]))


class WindowBuffer:
    """Incremental sliding window: push frames, get a window every ``stride`` frames."""

    def __init__(self, stride: int = DEFAULT_STRIDE, size: int = WINDOW, tick: float = 1.0 / RATE_HZ):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.stride = stride
        self.size = size
        self.tick = tick
        self.reset()

    def reset(self) -> None:
        self._rows: deque = deque(maxlen=self.size)
        self._times: deque = deque(maxlen=self.size)
        self._count = 0
        self._last_t = None

    def push(self, frame: ImuFrame) -> ImuWindow | None:
        if self._last_t is not None:
            dt = frame.t - self._last_t
            if dt <= 0 or dt > self.tick * 1.5:
                raise GapError(frame.t, self._last_t)
        self._last_t = frame.t
        self._rows.append(frame.features)
        self._times.append(frame.t)
        self._count += 1
        if self._count >= self.size and (self._count - self.size) % self.stride == 0:
            return ImuWindow(np.array(self._rows), self._times[0])
        return None

    @property
    def filled(self) -> int:
        return len(self._rows)


def window_stream(frames: Iterable[ImuFrame], stride: int = DEFAULT_STRIDE) -> Iterator[ImuWindow]:
    """Every contiguous 500-frame window at the given stride, in order."""
    buf = WindowBuffer(stride)
    for fr in frames:
        w = buf.push(fr)
        if w is not None:
            yield w


def expected_window_count(n_frames: int, stride: int = DEFAULT_STRIDE, size: int = WINDOW) -> int:
    return 0 if n_frames < size else (n_frames - size) // stride + 1
