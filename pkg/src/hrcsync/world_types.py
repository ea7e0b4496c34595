"""Value types shared across modules: intent labels, poses and boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

QUAT_TOL = 1e-9
# renormalise quaternions up to this deviation from unit norm, reject beyond
QUAT_RENORM_LIMIT = 1e-2


class Intent(str, Enum):
    WORKING = "Working"
    IDLE = "Idle"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


def _vec3(v, what: str) -> tuple[float, float, float]:
    t = tuple(float(x) for x in v)
    if len(t) != 3:
        raise ValueError(f"{what} must have 3 components, got {len(t)}")
    if not all(math.isfinite(x) for x in t):
        raise ValueError(f"{what} has non-finite components: {t}")
    return t


@dataclass(frozen=True)
class Pose:
    """Position (m, world frame) and unit quaternion (w, x, y, z)."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        q = tuple(float(x) for x in self.orientation)
        if len(q) != 4 or not all(math.isfinite(x) for x in q):
            raise ValueError(f"orientation must be 4 finite numbers, got {self.orientation}")
        n = math.sqrt(sum(x * x for x in q))
        if abs(n - 1.0) > QUAT_RENORM_LIMIT:
            raise ValueError(f"orientation norm {n} too far from 1")
        if abs(n - 1.0) > QUAT_TOL:
            q = tuple(x / n for x in q)
        object.__setattr__(self, "orientation", q)

    def to_json(self) -> dict:
        return {"p": list(self.position), "q": list(self.orientation)}

    @classmethod
    def from_json(cls, d) -> "Pose":
        if isinstance(d, dict):
            return cls(tuple(d["p"]), tuple(d.get("q", (1.0, 0.0, 0.0, 0.0))))
        return cls(tuple(d))

    def distance(self, other: "Pose") -> float:
        return math.dist(self.position, other.position)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, ``lo < hi`` on every axis."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = _vec3(self.lo, "box min corner")
        hi = _vec3(self.hi, "box max corner")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box min {lo} must be below max {hi} on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, p) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, p, self.hi))

    def translated(self, v) -> "Box":
        return Box(
            tuple(a + d for a, d in zip(self.lo, v)),
            tuple(b + d for b, d in zip(self.hi, v)),
        )

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple(0.5 * (a + b) for a, b in zip(self.lo, self.hi))
