"""Trajectory feature extraction and taxonomy-based feature selection."""

__version__ = "0.1.0"
