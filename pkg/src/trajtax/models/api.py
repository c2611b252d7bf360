"""Uniform train/predict surface over the four classifier families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from trajtax.errors import DegenerateDataError
from trajtax.models.boosting import GradientBoostedTrees
from trajtax.models.forest import RandomForest
from trajtax.models.logistic import LogisticRegression
from trajtax.models.mlp import MLP

FAMILIES = ("logistic_regression", "random_forest", "gradient_boosted_trees", "mlp")

# untuned settings: the usual library defaults of each family
DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "logistic_regression": {"c": 1.0, "penalty": "l2", "solver": "lbfgs"},
    "random_forest": {"n_estimators": 100, "max_depth": None, "max_features": "sqrt"},
    "gradient_boosted_trees": {"n_estimators": 100, "max_depth": 6, "learning_rate": 0.3, "sub_sample": 1.0},
    "mlp": {"hidden_layer_sizes": (100,), "alpha": 1e-4, "learning_rate_init": 1e-3},
}

_BUILDERS = {
    "logistic_regression": LogisticRegression,
    "random_forest": RandomForest,
    "gradient_boosted_trees": GradientBoostedTrees,
    "mlp": MLP,
}


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.hyperparameters) - set(DEFAULT_HYPERPARAMETERS[self.family])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.family}: {sorted(unknown)}")

    @classmethod
    def default(cls, family: str, seed: int = 0, **overrides) -> "ClassifierSpec":
        return cls(family, {**DEFAULT_HYPERPARAMETERS[family], **overrides}, seed)

    def resolved(self) -> dict[str, Any]:
        return {**DEFAULT_HYPERPARAMETERS[self.family], **self.hyperparameters}

    def to_dict(self) -> dict:
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in self.resolved().items()}
        return {"family": self.family, "hyperparameters": params, "seed": self.seed}


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    classes: tuple[str, ...]
    n_features: int
    estimator: Any

    def predict_proba(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        if X.shape[0] == 0:
            return np.zeros((0, len(self.classes)))
        return self.estimator.predict_proba(X)


def _check_X(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature array, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"model was trained on {n_features} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DegenerateDataError("feature array contains NaN or infinite values")
    return X


def train(spec: ClassifierSpec, X, y: Sequence) -> TrainedModel:
    X = _check_X(X)
    y = np.asarray([str(v) for v in y])
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y differ in length")
    classes, y_idx = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise DegenerateDataError(f"need at least 2 classes, got {classes.tolist()}")
    params = spec.resolved()
    estimator = _BUILDERS[spec.family](**params, seed=spec.seed)
    estimator.fit(X, y_idx.astype(np.intp), classes.size)
    return TrainedModel(spec, tuple(classes.tolist()), X.shape[1], estimator)


def predict(model: TrainedModel, X) -> list[str]:
    """Most probable label per row; ties go to the lexically smaller label."""
    proba = model.predict_proba(X)
    return [model.classes[i] for i in np.argmax(proba, axis=1)]
