"""Minibatch training of the LSTM classifier (BPTT + Adam)."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .lstm import LstmParams, flat_grad, loss_and_grad
from .synth import WORKING, ImuDataset, SynthConfig, synth_window

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    hidden: int = 32
    clip: float = 1.0  # global gradient-norm clip
    lr_decay: float = 0.8  # per-epoch multiplicative learning-rate decay
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        for name in ("lr", "epochs", "batch_size", "hidden", "clip", "lr_decay"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossCurve:
    epochs: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["# hrcsync loss-curve v1", "epoch,loss"]
        lines += [f"{k + 1},{v!r}" for k, v in enumerate(self.epochs)]
        lines += [f"# warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def fit_normalization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std over every frame of every window."""
    flat = X.reshape(-1, X.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    std[std < 1e-8] = 1.0
    return mean, std


def gradcheck_case(hidden: int, seed: int, steps: int = 500) -> tuple[LstmParams, np.ndarray, int]:
    """Random init plus a synthetic Working window, normalised by the window's own stats.

    Without normalisation the raw gravity and field components saturate the
    gates, and finite differences then measure round-off instead of slope.
    """
    rng = np.random.default_rng(seed)
    window = synth_window(SynthConfig(), WORKING, rng, length=steps)
    params = LstmParams.init(hidden, rng)
    params.mean, params.std = fit_normalization(window[None])
    return params, window, 1


def train(data: ImuDataset, hyper: TrainConfig | None = None) -> tuple[LstmParams, LossCurve]:
    hyper = hyper or TrainConfig()
    y_all = data.y.astype(float)
    if len(np.unique(data.y)) < 2:
        raise ValueError("training set must contain both Working and Idle windows")
    rng = np.random.default_rng(hyper.seed)
    params = LstmParams.init(hyper.hidden, rng, n_features=data.X.shape[2])
    params.mean, params.std = fit_normalization(data.X)

    theta = params.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0
    curve = LossCurve()
    n = len(data)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        lr = hyper.lr * hyper.lr_decay ** epoch
        losses = []
        for bi, start in enumerate(range(0, n, hyper.batch_size)):
            idx = np.sort(order[start:start + hyper.batch_size])
            loss, grads = loss_and_grad(params, data.X[idx], y_all[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch {bi + 1}")
            g = flat_grad(grads)
            norm = np.linalg.norm(g)
            if norm > hyper.clip:
                g = g * (hyper.clip / norm)
            step += 1
            m = hyper.beta1 * m + (1 - hyper.beta1) * g
            v = hyper.beta2 * v + (1 - hyper.beta2) * g * g
            m_hat = m / (1 - hyper.beta1 ** step)
            v_hat = v / (1 - hyper.beta2 ** step)
            theta = theta - lr * m_hat / (np.sqrt(v_hat) + 1e-8)
            params = params.with_flat(theta)
            losses.append(loss * len(idx))
        epoch_loss = float(np.sum(losses) / n)
        if curve.epochs and epoch_loss > curve.epochs[-1]:
            msg = f"loss rose at epoch {epoch + 1}: {curve.epochs[-1]:.6g} -> {epoch_loss:.6g}"
            curve.warnings.append(msg)
            log.warning(msg)
        curve.epochs.append(epoch_loss)
        log.info("epoch %d loss %.6f", epoch + 1, epoch_loss)
    return params, curve
