"""Seeded stratified folds and cross-validated scoring."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from trajtax.errors import ProtocolError
from trajtax.features import ScaleState
from trajtax.metrics import weighted_f1

PI_SEEDS = (14159, 26535, 89793, 23846)


@dataclass(frozen=True)
class CvProtocol:
    """Outer seeds x stratified folds; ``tuned`` lists the tuning branches to run."""

    seeds: tuple[int, ...] = PI_SEEDS
    folds: int = 5
    tuned: tuple[bool, ...] = (False,)

    def __post_init__(self):
        seeds = tuple(int(s) for s in self.seeds)
        tuned = (self.tuned,) if isinstance(self.tuned, bool) else tuple(bool(t) for t in self.tuned)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "tuned", tuned)
        if not seeds:
            raise ProtocolError("protocol needs at least one seed")
        if self.folds < 2:
            raise ProtocolError(f"folds must be >= 2, got {self.folds}")
        if not tuned:
            raise ProtocolError("protocol needs at least one tuning branch")

    @property
    def iterations(self) -> int:
        return len(self.seeds) * self.folds

    def inner(self, seed: int) -> "CvProtocol":
        return CvProtocol(seeds=(seed,), folds=self.folds, tuned=self.tuned)


def stratified_kfold(labels: Sequence, k: int, seed: int) -> list[np.ndarray]:
    """Split indices into ``k`` test folds preserving class proportions.

    Each class is shuffled with one seeded generator (classes visited in
    sorted order) and dealt round-robin; the dealing offset carries over
    between classes so total fold sizes also differ by at most one.
    """
    labels = [str(v) for v in labels]
    counts = Counter(labels)
    small = sorted(c for c, n in counts.items() if n < k)
    if small:
        raise ProtocolError(f"class(es) {small} have fewer than {k} members for {k}-fold stratification")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for label in sorted(counts):
        members = np.array([i for i, v in enumerate(labels) if v == label])
        members = members[rng.permutation(members.size)]
        for j, idx in enumerate(members.tolist()):
            folds[(offset + j) % k].append(idx)
        offset = (offset + members.size) % k
    return [np.array(sorted(f), dtype=int) for f in folds]


def complement(n: int, test: np.ndarray) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.flatnonzero(mask)


class FitCounter:
    """Counts model-training invocations."""

    def __init__(self):
        self.count = 0

    def add(self, n: int = 1) -> None:
        self.count += n


def cv_score(spec, X: np.ndarray, y: Sequence, folds: Sequence[np.ndarray], counter: FitCounter | None = None) -> float:
    """Mean weighted F1 over ``folds``, standardising inside each fold."""
    from trajtax.models.api import predict, train

    X = np.asarray(X, dtype=float)
    y = np.asarray([str(v) for v in y])
    scores = []
    for test in folds:
        tr = complement(len(y), test)
        scaler = ScaleState.fit(X[tr])
        model = train(spec, scaler.transform(X[tr]), y[tr])
        if counter is not None:
            counter.add()
        scores.append(weighted_f1(y[test], predict(model, scaler.transform(X[test]))))
    return float(np.mean(scores))
