"""Deterministic synthetic IMU windows standing in for a recorded dataset.

Signal model, per feature (36 = 4 sensors x accel/gyro/mag):

* every segment tilts each sensor away from its nominal resting
  orientation by a small random rotation (``tilt_sigma`` rad), so each
  sensor sees gravity (``gravity`` m/s^2, nominally along +z) and the earth
  field (``earth_field`` uT, nominally along ``mag_dir``) along a fixed
  direction for the whole segment;
* Working: on top of that baseline, ``n_components`` limb oscillations with
  frequencies in ``freq_hz``; each sensor gets the component phase plus a
  Gaussian jitter of ``phase_jitter`` rad and each axis a random amplitude from
  the per-modality ranges;
* Idle: the baseline plus a slow sinusoidal drift (``drift_hz``, per-modality
  ``drift_*`` amplitudes);
* both: white Gaussian noise with per-modality ``noise_*`` sigma.

All randomness derives from ``numpy.random.SeedSequence`` keyed by the seed
and the segment index, so a window (or a streamed tick) is a pure function
of its key.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..world_types import Intent
from .frames import N_FEATURES, RATE_HZ, SENSORS, WINDOW

WORKING = "working"
IDLE = "idle"
_KIND_CODE = {WORKING: 1, IDLE: 0}


@dataclass(frozen=True)
class SynthConfig:
    rate_hz: float = RATE_HZ
    gravity: float = 9.81
    earth_field: float = 45.0
    mag_dir: tuple[float, float, float] = (0.45, 0.0, -0.89)
    tilt_sigma: float = 0.1
    n_components: int = 2
    freq_hz: tuple[float, float] = (0.5, 3.0)
    phase_jitter: float = 0.6
    amp_accel: tuple[float, float] = (0.8, 3.0)
    amp_gyro: tuple[float, float] = (0.3, 1.5)
    amp_mag: tuple[float, float] = (1.0, 4.0)
    drift_hz: tuple[float, float] = (0.005, 0.05)
    drift_accel: float = 0.1
    drift_gyro: float = 0.02
    drift_mag: float = 1.0
    noise_accel: float = 0.05
    noise_gyro: float = 0.02
    noise_mag: float = 0.4
    max_offset_s: float = 60.0

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _per_feature(cfg: SynthConfig, accel, gyro, mag) -> np.ndarray:
    one = np.array([accel] * 3 + [gyro] * 3 + [mag] * 3, dtype=float)
    return np.tile(one, len(SENSORS))


def _tilted(rng, nominal, sigma, n):
    v = np.asarray(nominal, dtype=float)
    v = v / np.linalg.norm(v) + rng.normal(0.0, sigma, size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Segment:
    """Frozen draw of one activity segment's signal parameters."""

    kind: str
    baseline: np.ndarray  # (36,)
    freqs: np.ndarray  # (C,) or drift (36,)
    phases: np.ndarray  # (C, 36) or (36,)
    amps: np.ndarray  # (C, 36) or (36,)


def draw_baseline(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Static part of the 36 features: tilted gravity and earth field per sensor."""
    n_s = len(SENSORS)
    g_dir = _tilted(rng, (0.0, 0.0, 1.0), cfg.tilt_sigma, n_s) * cfg.gravity
    m_dir = _tilted(rng, cfg.mag_dir, cfg.tilt_sigma, n_s) * cfg.earth_field
    return np.concatenate([np.concatenate([g_dir[s], np.zeros(3), m_dir[s]]) for s in range(n_s)])


def draw_segment(
    cfg: SynthConfig, kind: str, rng: np.random.Generator, baseline: np.ndarray | None = None
) -> Segment:
    if kind not in _KIND_CODE:
        raise ValueError(f"unknown motion kind {kind!r}")
    n_s = len(SENSORS)
    drawn = draw_baseline(cfg, rng)
    baseline = drawn if baseline is None else np.asarray(baseline, dtype=float)
    if kind == WORKING:
        C = cfg.n_components
        freqs = rng.uniform(*cfg.freq_hz, size=C)
        base_phase = rng.uniform(0.0, 2 * np.pi, size=(C, 1))
        jitter = rng.normal(0.0, cfg.phase_jitter, size=(C, n_s)).repeat(9, axis=1)
        axis_phase = rng.uniform(0.0, 2 * np.pi, size=(C, N_FEATURES))
        phases = base_phase + jitter + axis_phase
        lo = _per_feature(cfg, cfg.amp_accel[0], cfg.amp_gyro[0], cfg.amp_mag[0])
        hi = _per_feature(cfg, cfg.amp_accel[1], cfg.amp_gyro[1], cfg.amp_mag[1])
        amps = rng.uniform(lo, hi, size=(C, N_FEATURES)) / np.sqrt(C)
        return Segment(kind, baseline, freqs, phases, amps)
    freqs = rng.uniform(*cfg.drift_hz, size=N_FEATURES)
    phases = rng.uniform(0.0, 2 * np.pi, size=N_FEATURES)
    amps = _per_feature(cfg, cfg.drift_accel, cfg.drift_gyro, cfg.drift_mag) * rng.uniform(
        0.5, 1.0, size=N_FEATURES
    )
    return Segment(kind, baseline, freqs, phases, amps)


def segment_signal(seg: Segment, t: np.ndarray) -> np.ndarray:
    """Noise-free signal of a segment at local times ``t`` (seconds), shape (n, 36)."""
    t = np.asarray(t, dtype=float)[:, None]
    if seg.kind == WORKING:
        out = np.broadcast_to(seg.baseline, (t.shape[0], N_FEATURES)).copy()
        for c in range(len(seg.freqs)):
            out += seg.amps[c] * np.sin(2 * np.pi * seg.freqs[c] * t + seg.phases[c])
        return out
    return seg.baseline + seg.amps * np.sin(2 * np.pi * seg.freqs * t + seg.phases)


def noise_sigma(cfg: SynthConfig) -> np.ndarray:
    return _per_feature(cfg, cfg.noise_accel, cfg.noise_gyro, cfg.noise_mag)


def synth_window(cfg: SynthConfig, kind: str, rng: np.random.Generator, length: int = WINDOW) -> np.ndarray:
    seg = draw_segment(cfg, kind, rng)
    t0 = rng.uniform(0.0, cfg.max_offset_s)
    t = t0 + np.arange(length) / cfg.rate_hz
    return segment_signal(seg, t) + rng.normal(size=(length, N_FEATURES)) * noise_sigma(cfg)


@dataclass(eq=False)
class ImuDataset:
    """Labelled windows: X (n, 500, 36) float64, y (n,) with 1 = Working."""

    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.uint8)
        if self.X.ndim != 3 or self.X.shape[2] != N_FEATURES or len(self.X) != len(self.y):
            raise ValueError(f"bad dataset shapes X{self.X.shape} y{self.y.shape}")

    def __len__(self) -> int:
        return len(self.y)

    def labels(self) -> list[Intent]:
        return [Intent.WORKING if v else Intent.IDLE for v in self.y]

    def subset(self, idx) -> "ImuDataset":
        return ImuDataset(self.X[idx], self.y[idx], dict(self.meta))


def synth_dataset(seed: int, n_per_class: int, cfg: SynthConfig | None = None) -> ImuDataset:
    """``n_per_class`` Working and Idle windows, interleaved W, I, W, I, ..."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    cfg = cfg or SynthConfig()
    X = np.empty((2 * n_per_class, WINDOW, N_FEATURES))
    y = np.empty(2 * n_per_class, dtype=np.uint8)
    for n in range(n_per_class):
        for j, kind in enumerate((WORKING, IDLE)):
            rng = np.random.default_rng([seed, _KIND_CODE[kind], n])
            X[2 * n + j] = synth_window(cfg, kind, rng)
            y[2 * n + j] = _KIND_CODE[kind]
    meta = {"seed": seed, "n_per_class": n_per_class, "generator": cfg.to_dict()}
    return ImuDataset(X, y, meta)


class MotionStream:
    """Tick-addressable synthetic stream for the simulated human.

    ``frame(tick, kind, segment_key, start_tick)`` is a pure function of its
    arguments and the seed: segment parameters come from
    ``(seed, segment_key)``, noise from fixed 1024-tick blocks keyed by
    ``(seed, block)``. Changing segment restarts the oscillation model while
    the tick timeline (and the noise) continues without a gap. The sensor
    orientations (the static baseline) are drawn once per stream, so a
    segment change does not make the worn sensors jump.
    """

    BLOCK = 1024

    def __init__(self, seed: int, cfg: SynthConfig | None = None):
        self.seed = seed
        self.cfg = cfg or SynthConfig()
        self._sigma = noise_sigma(self.cfg)
        self._seg_cache: dict = {}
        self._block = (None, None)
        self.baseline = draw_baseline(self.cfg, np.random.default_rng([seed, 13]))

    def segment(self, kind: str, segment_key: int) -> Segment:
        key = (kind, segment_key)
        seg = self._seg_cache.get(key)
        if seg is None:
            rng = np.random.default_rng([self.seed, 7, segment_key, _KIND_CODE[kind]])
            seg = draw_segment(self.cfg, kind, rng, self.baseline)
            self._seg_cache = {key: seg}
        return seg

    def _noise(self, tick: int) -> np.ndarray:
        b = tick // self.BLOCK
        if self._block[0] != b:
            rng = np.random.default_rng([self.seed, 11, b])
            self._block = (b, rng.normal(size=(self.BLOCK, N_FEATURES)))
        return self._block[1][tick % self.BLOCK] * self._sigma

    def frame(self, tick: int, kind: str, segment_key: int, start_tick: int) -> np.ndarray:
        seg = self.segment(kind, segment_key)
        t_local = (tick - start_tick) / self.cfg.rate_hz
        return segment_signal(seg, np.array([t_local]))[0] + self._noise(tick)
