"""Single-layer LSTM binary classifier written directly against numpy.

Recurrence (gates stacked in the order i, f, g, o)::

    z_t = W x_t + U h_{t-1} + b
    i_t = sigmoid(z_i)   f_t = sigmoid(z_f)   g_t = tanh(z_g)   o_t = sigmoid(z_o)
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)
    p   = sigmoid(w_out . h_T + b_out)

with ``h_0 = c_0 = 0``. Inputs are z-normalised with the feature statistics
stored in the parameter set, so a saved model is self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..world_types import Intent

GATES = ("i", "f", "g", "o")
N_FEATURES = 36


class DimensionError(ValueError):
    pass


def sigmoid(x):
    # split by sign so exp never overflows
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(eq=False)
class LstmParams:
    """Full parameter set; gate blocks are stacked along the first axis of W, U, b."""

    W: np.ndarray  # (4H, F)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)
    w_out: np.ndarray  # (H,)
    b_out: float
    mean: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    std: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.U = np.asarray(self.U, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.w_out = np.asarray(self.w_out, dtype=float)
        self.b_out = float(self.b_out)
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        H = self.hidden_size
        F = self.input_size
        expected = {
            "W": (4 * H, F),
            "U": (4 * H, H),
            "b": (4 * H,),
            "w_out": (H,),
            "mean": (F,),
            "std": (F,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        if self.W.shape[0] % 4:
            raise DimensionError("W rows must be a multiple of 4")
        for name in ("W", "U", "b", "w_out", "mean", "std"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")
        if not np.isfinite(self.b_out):
            raise ValueError("b_out is not finite")
        if np.any(self.std <= 0):
            raise ValueError("std entries must be strictly positive")

    @property
    def hidden_size(self) -> int:
        return self.W.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(input weights, recurrent weights, bias) of one gate, as views."""
        k = GATES.index(name)
        H = self.hidden_size
        sl = slice(k * H, (k + 1) * H)
        return self.W[sl], self.U[sl], self.b[sl]

    @classmethod
    def zeros(cls, hidden: int, n_features: int = N_FEATURES) -> "LstmParams":
        return cls(
            W=np.zeros((4 * hidden, n_features)),
            U=np.zeros((4 * hidden, hidden)),
            b=np.zeros(4 * hidden),
            w_out=np.zeros(hidden),
            b_out=0.0,
            mean=np.zeros(n_features),
            std=np.ones(n_features),
        )

    @classmethod
    def init(
        cls, hidden: int, rng: np.random.Generator, n_features: int = N_FEATURES,
        scale: float | None = None, forget_bias: float = 1.0,
    ) -> "LstmParams":
        """Small-uniform initialisation, bound ``1/sqrt(H)`` unless given."""
        s = 1.0 / np.sqrt(hidden) if scale is None else scale
        b = rng.uniform(-s, s, 4 * hidden)
        b[hidden:2 * hidden] += forget_bias
        return cls(
            W=rng.uniform(-s, s, (4 * hidden, n_features)),
            U=rng.uniform(-s, s, (4 * hidden, hidden)),
            b=b,
            w_out=rng.uniform(-s, s, hidden),
            b_out=0.0,
            mean=np.zeros(n_features),
            std=np.ones(n_features),
        )

    # flat vector view used by the optimiser and gradient check
    TRAINABLE = ("W", "U", "b", "w_out", "b_out")

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(getattr(self, n)) for n in self.TRAINABLE])

    def with_flat(self, vec: np.ndarray) -> "LstmParams":
        vec = np.asarray(vec, dtype=float)
        total = sum(np.size(getattr(self, n)) for n in self.TRAINABLE)
        if vec.shape != (total,):
            raise DimensionError(f"flat vector has shape {vec.shape}, expected ({total},)")
        out = {}
        pos = 0
        for n in self.TRAINABLE:
            cur = np.asarray(getattr(self, n))
            size = cur.size
            chunk = vec[pos:pos + size]
            out[n] = float(chunk[0]) if n == "b_out" else chunk.reshape(cur.shape).copy()
            pos += size
        return replace(self, mean=self.mean.copy(), std=self.std.copy(), **out)

    def copy(self) -> "LstmParams":
        return replace(
            self, **{f.name: np.copy(getattr(self, f.name)) for f in fields(self) if f.name != "b_out"}
        )

    def equals(self, other: "LstmParams") -> bool:
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self)
        )


def _check_input(params: LstmParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim not in (2, 3) or x.shape[-1] != params.input_size:
        raise DimensionError(
            f"input has shape {x.shape}, expected (..., T, {params.input_size})"
        )
    if x.shape[-2] < 1:
        raise DimensionError("input sequence is empty")
    return x


def _gate_split(z, H):
    return z[..., :H], z[..., H:2 * H], z[..., 2 * H:3 * H], z[..., 3 * H:]


def _activation_consts(H, dtype):
    scale = np.full(4 * H, 0.5, dtype=dtype)
    scale[2 * H:3 * H] = 1.0
    mul = scale.copy()
    add = np.full(4 * H, 0.5, dtype=dtype)
    add[2 * H:3 * H] = 0.0
    return scale, mul, add


def forward_batch(params: LstmParams, X: np.ndarray, dtype=np.float64, keep: bool = False):
    """Run the recurrence over a batch (B, T, F).

    Returns the logits (B,), and when ``keep`` the per-step cache needed by
    ``loss_and_grad``.
    """
    X = _check_input(params, X)
    if X.ndim == 2:
        X = X[None]
    H = params.hidden_size
    B, T, _ = X.shape
    W = params.W.astype(dtype)
    U_T = params.U.T.astype(dtype)
    Xn = ((X - params.mean) / params.std).astype(dtype)
    Z_in = Xn @ W.T + params.b.astype(dtype)
    h = np.zeros((B, H), dtype=dtype)
    c = np.zeros((B, H), dtype=dtype)
    if keep:
        cache_gates = np.empty((T, B, 4 * H), dtype=dtype)
        cache_c = np.empty((T + 1, B, H), dtype=dtype)
        cache_h = np.empty((T + 1, B, H), dtype=dtype)
        cache_c[0] = c
        cache_h[0] = h
    # sigmoid(x) = 0.5 + 0.5 tanh(x / 2): one tanh call covers all four gates
    scale, mul, add = _activation_consts(H, dtype)
    for t in range(T):
        z = Z_in[:, t] + h @ U_T
        a = np.tanh(z * scale) * mul + add
        i, f, g, o = _gate_split(a, H)
        c = f * c + i * g
        h = o * np.tanh(c)
        if keep:
            cache_gates[t] = a
            cache_c[t + 1] = c
            cache_h[t + 1] = h
    logits = h @ params.w_out.astype(dtype) + dtype(params.b_out)
    if keep:
        return logits, (Xn, cache_gates, cache_c, cache_h)
    return logits


def hidden_trace(params: LstmParams, window: np.ndarray) -> np.ndarray:
    """All hidden states h_1..h_T for one sequence, shape (T, H)."""
    _, (_, _, _, hs) = forward_batch(params, np.asarray(window)[None], keep=True)
    return hs[1:, 0, :]


def lstm_forward(params: LstmParams, window, dtype=np.float64) -> float:
    """Probability that ``window`` (T x F, raw features) shows the Working state."""
    window = _check_input(params, window)
    if window.ndim != 2:
        raise DimensionError("lstm_forward takes a single (T, F) window")
    logit = forward_batch(params, window, dtype=dtype)[0]
    return float(sigmoid(np.array([logit], dtype=float))[0])


def predict_proba(params: LstmParams, X: np.ndarray, batch_size: int = 256) -> np.ndarray:
    X = _check_input(params, X)
    if X.ndim == 2:
        X = X[None]
    out = [forward_batch(params, X[k:k + batch_size]) for k in range(0, len(X), batch_size)]
    return sigmoid(np.concatenate(out))


def classify_window(prob: float, threshold: float = 0.5) -> Intent:
    """Working iff ``prob >= threshold``; an exact tie goes to Working."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    return Intent.WORKING if prob >= threshold else Intent.IDLE


def bce_from_logits(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, logits) - y * logits


def loss_and_grad(params: LstmParams, X: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy over the batch and its gradient (BPTT).

    Returns ``(loss, grads)`` where grads maps each trainable name to an array
    shaped like the parameter (``b_out`` is a float).
    """
    X = _check_input(params, X)
    if X.ndim == 2:
        X = X[None]
    y = np.asarray(y, dtype=float).reshape(-1)
    B, T, _ = X.shape
    H = params.hidden_size
    logits, (Xn, gates, cs, hs) = forward_batch(params, X, keep=True)
    loss = float(np.mean(bce_from_logits(logits, y)))

    dlogit = (sigmoid(logits) - y) / B
    g_w_out = hs[T].T @ dlogit
    g_b_out = float(np.sum(dlogit))

    dZ = np.empty((T, B, 4 * H))
    dh = np.outer(dlogit, params.w_out)
    dc = np.zeros((B, H))
    U = params.U
    for t in range(T - 1, -1, -1):
        i, f, g, o = _gate_split(gates[t], H)
        c = cs[t + 1]
        tc = np.tanh(c)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * cs[t]
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
            axis=1,
        )
        dZ[t] = dz
        dh = dz @ U
        dc = dc * f
    # dZ is (T, B, 4H); Xn is (B, T, F); hs[:-1] are the h_{t-1}
    g_W = np.einsum("tbk,btf->kf", dZ, Xn)
    g_U = np.einsum("tbk,tbh->kh", dZ, hs[:-1])
    g_b = dZ.sum(axis=(0, 1))
    grads = {"W": g_W, "U": g_U, "b": g_b, "w_out": g_w_out, "b_out": g_b_out}
    return loss, grads


def flat_grad(grads: dict) -> np.ndarray:
    return np.concatenate([np.ravel(grads[n]) for n in LstmParams.TRAINABLE])


def window_loss(params: LstmParams, window: np.ndarray, label: float) -> float:
    logit = forward_batch(params, np.asarray(window)[None])
    return float(bce_from_logits(logit, np.array([label], dtype=float))[0])


def gradient_check(params: LstmParams, window, label, epsilon: float = 1e-5) -> float:
    """Largest relative error between the BPTT gradient and central differences.

    Relative error per parameter is ``|a - n| / max(|a|, |n|, 1e-12)``, taken
    over every trainable entry; a parameter with no path to the loss has both
    terms at zero and contributes zero.
    """
    window = np.asarray(window, dtype=np.float64)
    y = 1.0 if label in (1, 1.0, True, Intent.WORKING) else 0.0
    _, grads = loss_and_grad(params, window[None], np.array([y]))
    analytic = flat_grad(grads)
    work = params.copy()
    numeric = []
    for name in LstmParams.TRAINABLE:
        if name == "b_out":
            base = work.b_out
            work.b_out = base + epsilon
            lp = window_loss(work, window, y)
            work.b_out = base - epsilon
            lm = window_loss(work, window, y)
            work.b_out = base
            numeric.append((lp - lm) / (2.0 * epsilon))
            continue
        arr = getattr(work, name)
        flat = arr.reshape(-1)  # view into the working copy
        for k in range(flat.size):
            base = flat[k]
            flat[k] = base + epsilon
            lp = window_loss(work, window, y)
            flat[k] = base - epsilon
            lm = window_loss(work, window, y)
            flat[k] = base
            numeric.append((lp - lm) / (2.0 * epsilon))
    numeric = np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))
