"""Exhaustive hyperparameter grids and cross-validated grid search."""

from __future__ import annotations

import itertools
from typing import Any, Mapping, Sequence

import numpy as np

from trajtax.cv import CvProtocol, FitCounter, cv_score, stratified_kfold
from trajtax.errors import ConfigurationError
from trajtax.models.api import DEFAULT_HYPERPARAMETERS, FAMILIES, ClassifierSpec

HyperGrid = dict[str, dict[str, list[Any]]]


def default_grids() -> HyperGrid:
    return {
        "logistic_regression": {
            "c": [0.1, 1.0, 10.0],
            "penalty": ["l1", "l2"],
            "solver": ["liblinear", "saga"],
        },
        "random_forest": {
            "n_estimators": [100, 500, 1000],
            "max_depth": [None, 10, 20],
            "max_features": ["sqrt", "log2", 16],
        },
        "gradient_boosted_trees": {
            "n_estimators": [100, 500, 1000],
            "max_depth": [3, 6, 10],
            "learning_rate": [0.01, 0.1],
            "sub_sample": [0.8, 1.0],
        },
        "mlp": {
            "hidden_layer_sizes": [(50,), (100,), (50, 50)],
            "alpha": [1e-4, 1e-3, 1e-2],
            "learning_rate_init": [1e-4, 1e-3, 1e-2],
        },
    }


def _normalise_value(name: str, value):
    if name == "hidden_layer_sizes":
        return (int(value),) if isinstance(value, int) else tuple(int(v) for v in value)
    if isinstance(value, str) and value.lower() in ("none", "null"):
        return None
    return value


def load_grids(overrides: Mapping | None = None) -> HyperGrid:
    """Default grids with per-family replacements from a config mapping.

    A family entry in ``overrides`` replaces the listed hyperparameters only.
    """
    grids = default_grids()
    for family, params in (overrides or {}).items():
        if family not in FAMILIES:
            raise ConfigurationError(f"grid for unknown family {family!r}")
        for name, values in params.items():
            if name not in DEFAULT_HYPERPARAMETERS[family]:
                raise ConfigurationError(f"unknown hyperparameter {family}.{name}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigurationError(f"grid {family}.{name} must be a non-empty list")
            grids[family][name] = [_normalise_value(name, v) for v in values]
    return grids


def grid_candidates(family: str, grid: HyperGrid) -> list[dict[str, Any]]:
    """Cartesian product of the family's grid in declaration order."""
    params = grid.get(family)
    if not params:
        raise ConfigurationError(f"empty grid for family {family!r}")
    names = list(params)
    return [dict(zip(names, combo)) for combo in itertools.product(*(params[n] for n in names))]


def grid_search(family: str, grid: HyperGrid, X, y: Sequence, protocol: CvProtocol,
                seed: int | None = None, counter: FitCounter | None = None,
                scores: list | None = None) -> ClassifierSpec:
    """Best candidate by mean stratified-CV weighted F1; first wins ties.

    Folds use ``protocol.seeds[0]``; models are seeded with ``seed`` (default
    the same). A single-candidate grid is returned without evaluation.
    Per-candidate scores are appended to ``scores`` when given.
    """
    candidates = grid_candidates(family, grid)
    fold_seed = protocol.seeds[0]
    model_seed = fold_seed if seed is None else seed
    if len(candidates) == 1:
        return ClassifierSpec(family, candidates[0], model_seed)
    folds = stratified_kfold(y, protocol.folds, fold_seed)
    best_spec, best_score = None, -np.inf
    for params in candidates:
        spec = ClassifierSpec(family, params, model_seed)
        score = cv_score(spec, X, y, folds, counter)
        if scores is not None:
            scores.append((params, score))
        if score > best_score:
            best_spec, best_score = spec, score
    return best_spec
