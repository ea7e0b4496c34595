"""Precision / recall / F-score with Working as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..world_types import Intent
from .lstm import LstmParams, predict_proba
from .synth import ImuDataset

UNDEFINED = "undefined"


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float | None:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> float | None:
        d = self.tp + self.fn
        return self.tp / d if d else None

    @property
    def f_score(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fp + self.tn + self.fn)

    def to_dict(self) -> dict:
        def fmt(v):
            return UNDEFINED if v is None else v

        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": fmt(self.precision), "recall": fmt(self.recall),
            "f_score": fmt(self.f_score),
        }


def f_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall)


def _as_bool(labels) -> np.ndarray:
    out = []
    for v in labels:
        if isinstance(v, Intent):
            out.append(v is Intent.WORKING)
        else:
            out.append(bool(v))
    return np.asarray(out, dtype=bool)


def confusion(y_true, y_pred) -> EvalReport:
    t = _as_bool(y_true)
    p = _as_bool(y_pred)
    if t.size == 0:
        raise ValueError("cannot evaluate an empty dataset")
    if t.shape != p.shape:
        raise ValueError("label arrays differ in length")
    return EvalReport(
        tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
        tn=int(np.sum(~t & ~p)), fn=int(np.sum(t & ~p)),
    )


def eval_metrics(params: LstmParams, dataset: ImuDataset, threshold: float = 0.5) -> EvalReport:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    prob = predict_proba(params, dataset.X)
    return confusion(dataset.y.astype(bool), prob >= threshold)
