"""Classifier families, training and grid search."""

from trajtax.models._kernels import BACKEND
from trajtax.models.api import (
    DEFAULT_HYPERPARAMETERS,
    FAMILIES,
    ClassifierSpec,
    TrainedModel,
    predict,
    train,
)
from trajtax.models.grid import HyperGrid, default_grids, grid_candidates, grid_search, load_grids

__all__ = [
    "BACKEND",
    "DEFAULT_HYPERPARAMETERS",
    "FAMILIES",
    "ClassifierSpec",
    "HyperGrid",
    "TrainedModel",
    "default_grids",
    "grid_candidates",
    "grid_search",
    "load_grids",
    "predict",
    "train",
]
