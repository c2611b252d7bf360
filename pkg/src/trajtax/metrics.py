"""Confusion counts and the macro, micro and weighted F1 scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    labels: tuple[str, ...]
    true_positives: tuple[int, ...]
    false_positives: tuple[int, ...]
    false_negatives: tuple[int, ...]

    def __post_init__(self):
        n = len(self.labels)
        if not (len(self.true_positives) == len(self.false_positives) == len(self.false_negatives) == n):
            raise ValueError("per-class count vectors must match the label count")
        if min((*self.true_positives, *self.false_positives, *self.false_negatives), default=0) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(tp + fn for tp, fn in zip(self.true_positives, self.false_negatives))

    @classmethod
    def from_predictions(cls, y_true: Sequence, y_pred: Sequence, labels: Sequence | None = None) -> "ConfusionCounts":
        y_true = [str(v) for v in y_true]
        y_pred = [str(v) for v in y_pred]
        if len(y_true) != len(y_pred):
            raise ValueError("y_true and y_pred differ in length")
        if labels is None:
            labels = sorted(set(y_true) | set(y_pred))
        labels = tuple(str(v) for v in labels)
        index = {lab: i for i, lab in enumerate(labels)}
        k = len(labels)
        t = np.array([index[v] for v in y_true], dtype=int)
        p = np.array([index[v] for v in y_pred], dtype=int)
        matrix = np.zeros((k, k), dtype=int)
        np.add.at(matrix, (t, p), 1)
        tp = np.diag(matrix)
        fp = matrix.sum(axis=0) - tp
        fn = matrix.sum(axis=1) - tp
        return cls(labels, tuple(tp.tolist()), tuple(fp.tolist()), tuple(fn.tolist()))


def per_class_f1(c: ConfusionCounts) -> np.ndarray:
    tp = np.asarray(c.true_positives, dtype=float)
    denom = 2 * tp + np.asarray(c.false_positives) + np.asarray(c.false_negatives)
    return np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)


def f1_scores(c: ConfusionCounts) -> tuple[float, float, float]:
    """Return ``(macro, micro, weighted)`` F1; a class with nothing to score gets F1 = 0."""
    support = np.asarray(c.support, dtype=float)
    total = support.sum()
    if total <= 0:
        raise ValueError("confusion has zero total support")
    f1 = per_class_f1(c)
    macro = float(f1.mean())
    tp = sum(c.true_positives)
    denom = 2 * tp + sum(c.false_positives) + sum(c.false_negatives)
    micro = 2 * tp / denom if denom else 0.0
    weighted = float(np.dot(support, f1) / total)
    return macro, float(micro), weighted


def weighted_f1(y_true: Sequence, y_pred: Sequence) -> float:
    return f1_scores(ConfusionCounts.from_predictions(y_true, y_pred))[2]
