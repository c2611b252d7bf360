"""Gradient-boosted regression trees on the softmax cross-entropy."""

from __future__ import annotations

import numpy as np
from scipy.special import softmax

from trajtax.models import _kernels
from trajtax.models.forest import Tree


class GradientBoostedTrees:
    """One Newton-step tree per class per round, XGBoost style.

    Fixed regularisation: L2 leaf penalty 1, minimum child hessian 1, no
    column subsampling. ``sub_sample`` draws rows without replacement once
    per round, shared by the class trees of that round.
    """

    reg_lambda = 1.0
    min_child_weight = 1.0

    def __init__(self, n_estimators: int = 100, max_depth: int = 6, learning_rate: float = 0.3,
                 sub_sample: float = 1.0, seed: int = 0):
        self.n_estimators = int(n_estimators)
        self.max_depth = int(max_depth)
        self.learning_rate = float(learning_rate)
        self.sub_sample = float(sub_sample)
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "GradientBoostedTrees":
        X = np.ascontiguousarray(X, dtype=np.float64)
        n = X.shape[0]
        Y = np.eye(n_classes)[y]
        rng = np.random.default_rng(self.seed)
        margin = np.zeros((n, n_classes))
        all_rows = np.arange(n, dtype=np.intp)
        n_sub = max(1, int(np.floor(self.sub_sample * n)))
        self.n_classes_ = n_classes
        self.rounds_: list[list[Tree]] = []
        for _ in range(self.n_estimators):
            if n_sub < n:
                rows = np.sort(rng.choice(n, size=n_sub, replace=False)).astype(np.intp)
            else:
                rows = all_rows
            P = softmax(margin, axis=1)
            trees = []
            for k in range(n_classes):
                grad = np.ascontiguousarray(P[:, k] - Y[:, k])
                hess = np.ascontiguousarray(np.maximum(2.0 * P[:, k] * (1.0 - P[:, k]), 1e-16))
                parts = _kernels.grow_newton_tree(
                    X, grad, hess, rows, self.max_depth, self.reg_lambda, self.min_child_weight
                )
                tree = Tree(*parts)
                margin[:, k] += self.learning_rate * tree.value[tree.apply(X)]
                trees.append(tree)
            self.rounds_.append(trees)
        return self

    @property
    def n_trees(self) -> int:
        return sum(len(r) for r in self.rounds_)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        margin = np.zeros((X.shape[0], self.n_classes_))
        for trees in self.rounds_:
            for k, tree in enumerate(trees):
                margin[:, k] += self.learning_rate * tree.value[tree.apply(X)]
        return margin

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_function(X), axis=1)
