"""Independent reference implementations used by the tests.

None of these share code with the package: the ray oracle marches points
along the ray, the LSTM oracle evaluates the gate equations scalar by
scalar, and the hysteresis oracle works on run lengths of known evidence.
"""

from __future__ import annotations

import math

import numba
import numpy as np

MARCH_STEP = 1e-4


@numba.njit(cache=True)
def _signed_dist(px, py, pz, lo, hi):
    # <= 0 inside (minus the depth), > 0 outside (euclidean distance)
    dx = max(lo[0] - px, px - hi[0])
    dy = max(lo[1] - py, py - hi[1])
    dz = max(lo[2] - pz, pz - hi[2])
    m = max(dx, max(dy, dz))
    if m <= 0.0:
        return m
    ox = max(dx, 0.0)
    oy = max(dy, 0.0)
    oz = max(dz, 0.0)
    return math.sqrt(ox * ox + oy * oy + oz * oz)


@numba.njit(cache=True)
def march(origin, direction, los, his, scene_lo, scene_hi, step):
    """Per box: first march index inside (-1 if never), closest approach
    from outside and deepest penetration inside.

    The march stops once the point leaves the scene bounds; every box lies
    inside those bounds, so nothing further along can be hit.
    """
    n = los.shape[0]
    first = np.full(n, -1, dtype=np.int64)
    near = np.full(n, np.inf)
    depth = np.zeros(n)
    k = 0
    while True:
        s = k * step
        px = origin[0] + s * direction[0]
        py = origin[1] + s * direction[1]
        pz = origin[2] + s * direction[2]
        if (px < scene_lo or px > scene_hi or py < scene_lo or py > scene_hi
                or pz < scene_lo or pz > scene_hi):
            break
        for b in range(n):
            d = _signed_dist(px, py, pz, los[b], his[b])
            if d <= 0.0:
                if first[b] < 0:
                    first[b] = k
                if -d > depth[b]:
                    depth[b] = -d
            elif d < near[b]:
                near[b] = d
        k += 1
    return first, near, depth


def march_oracle(origin, direction, los, his, scene=(-0.5, 0.5), step=MARCH_STEP):
    """Nearest hit box index (or None), its entry distance and the march record."""
    first, near, depth = march(
        np.asarray(origin, float), np.asarray(direction, float),
        np.asarray(los, float), np.asarray(his, float), scene[0], scene[1], step,
    )
    hits = [(first[b] * step, b) for b in range(len(first)) if first[b] >= 0]
    rec = (first, near, depth)
    if not hits:
        return None, None, rec
    d, b = min(hits)
    return b, d, rec


def random_scene(rng: np.random.Generator, scene=(-0.5, 0.5)):
    """Origin, unit direction and 1 to 4 boxes inside the scene cube.

    Half the rays are aimed at a random point of a random box so that hits
    are common; one case in ten then has one or two direction components
    zeroed to exercise the axis-parallel branch of the slab test.
    """
    lo_s, hi_s = scene
    n = int(rng.integers(1, 5))
    los, his = [], []
    for _ in range(n):
        size = rng.uniform(0.05, 0.4, 3)
        lo = rng.uniform(lo_s, hi_s - size)
        los.append(lo)
        his.append(lo + size)
    origin = rng.uniform(lo_s + 0.01, hi_s - 0.01, 3)
    d = rng.normal(size=3)
    if rng.random() < 0.5:
        b = int(rng.integers(n))
        d = los[b] + rng.random(3) * (his[b] - los[b]) - origin
    if rng.random() < 0.1:
        zero = rng.choice(3, size=int(rng.integers(1, 3)), replace=False)
        d[zero] = 0.0
        if not np.any(d):
            d[0] = 1.0
    d /= np.linalg.norm(d)
    return origin, d, np.array(los), np.array(his)


def well_posed(rec, step=MARCH_STEP, tol=10 * MARCH_STEP) -> bool:
    """True when the march resolves the case unambiguously.

    Rejected: a missed box approached closer than ``tol``, a hit box
    penetrated less than ``tol`` deep, or two hit boxes entered within
    ``tol`` of each other. At the march resolution these are undecidable and
    say nothing about either implementation, so the generator redraws them.
    """
    first, near, depth = rec
    hit = first >= 0
    if np.any(near[~hit] < tol) or np.any(depth[hit] < tol):
        return False
    d = np.sort(first[hit] * step)
    return not (len(d) >= 2 and d[1] - d[0] < tol)


# -- LSTM ---------------------------------------------------------------------


def _sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def lstm_scalar(Wi, Wf, Wg, Wo, Ui, Uf, Ug, Uo, bi, bf, bg, bo, w_out, b_out, xs):
    """Probability from the textbook recurrence, one scalar at a time.

    All weights are nested lists; ``xs`` is a list of input vectors that are
    already normalised.
    """
    H = len(bi)
    h = [0.0] * H
    c = [0.0] * H
    for x in xs:
        new_h, new_c = [], []
        for j in range(H):
            def pre(Wm, Um, bm):
                return bm[j] + sum(Wm[j][k] * x[k] for k in range(len(x))) + sum(Um[j][k] * h[k] for k in range(H))

            i = _sig(pre(Wi, Ui, bi))
            f = _sig(pre(Wf, Uf, bf))
            g = math.tanh(pre(Wg, Ug, bg))
            o = _sig(pre(Wo, Uo, bo))
            cj = f * c[j] + i * g
            new_c.append(cj)
            new_h.append(o * math.tanh(cj))
        h, c = new_h, new_c
    return _sig(sum(w_out[j] * h[j] for j in range(H)) + b_out)


# -- gaze hysteresis ------------------------------------------------------------


def hysteresis_reference(times, evidence, dwell, initial, eps=1e-9):
    """Label per sample from run lengths of a known binary evidence stream.

    The label takes the value of the current evidence run once that run has
    lasted ``dwell`` seconds; otherwise it keeps its previous value.
    """
    out = []
    label = initial
    run_val, run_start = None, None
    for t, e in zip(times, evidence):
        if e != run_val:
            run_val, run_start = e, t
        if e != label and t - run_start >= dwell - eps:
            label = e
        out.append(label)
    return out
