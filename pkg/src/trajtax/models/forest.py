"""Random forest of CART trees grown with the Gini criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from trajtax.models import _kernels


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)


def resolve_max_features(max_features, n_features: int) -> int:
    """Translate ``"sqrt"``, ``"log2"``, ``None`` or a count into a count in [1, n_features]."""
    if max_features is None or max_features == "none":
        k = n_features
    elif max_features == "sqrt":
        k = int(math.floor(math.sqrt(n_features)))
    elif max_features == "log2":
        k = int(math.floor(math.log2(n_features))) if n_features > 0 else 1
    elif isinstance(max_features, float) and 0 < max_features <= 1:
        k = int(math.floor(max_features * n_features))
    else:
        k = int(max_features)
    return max(1, min(k, n_features))


def tree_seeds(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)


class RandomForest:
    def __init__(self, n_estimators: int = 100, max_depth=None, max_features="sqrt",
                 min_samples_split: int = 2, seed: int = 0):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.intp)
        n, d = X.shape
        depth = -1 if self.max_depth is None or self.max_depth == "none" else int(self.max_depth)
        k = resolve_max_features(self.max_features, d)
        rng = np.random.default_rng(self.seed)
        self.n_classes_ = n_classes
        self.trees_: list[Tree] = []
        for _ in range(self.n_estimators):
            rows = rng.integers(0, n, size=n).astype(np.intp)
            (tree_seed,) = tree_seeds(rng, 1)
            parts = _kernels.grow_gini_tree(X, y, rows, n_classes, depth, k, self.min_samples_split, int(tree_seed))
            self.trees_.append(Tree(*parts))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        total = np.zeros((X.shape[0], self.n_classes_))
        for tree in self.trees_:
            total += tree.value[tree.apply(X)]
        return total / len(self.trees_)
