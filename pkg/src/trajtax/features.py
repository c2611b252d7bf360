"""Per-trajectory movement features, imputation and standardisation.

Every trajectory yields 72 values: a 15-value straightness signature
(``dg_*``) and 19 distribution descriptors for each of the turning-angle
(``ang_*``), speed (``spd_*``) and acceleration (``acc_*``) series.
Missing values are NaN until imputed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

from trajtax.trajectory import (
    GeoPoint,
    LabeledTrajectorySet,
    Trajectory,
    haversine_array,
    initial_bearing_array,
)

SIGNATURE_LEVELS = 5

DESCRIPTOR_NAMES: tuple[str, ...] = (
    "unique_count",
    "zero_count",
    "mean",
    "standard_error",
    "q01",
    "q05",
    "q25",
    "q50",
    "q75",
    "q95",
    "q99",
    "std_dev",
    "coeff_variation",
    "mad",
    "iqr",
    "skewness",
    "kurtosis",
    "min",
    "max",
)
QUANTILES = (0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99)

SERIES_PREFIXES = {"indentation": "ang", "speed": "spd", "acceleration": "acc"}

SIGNATURE_COLUMNS: tuple[str, ...] = tuple(
    f"dg_{j}_{i}" for j in range(1, SIGNATURE_LEVELS + 1) for i in range(1, j + 1)
)
FEATURE_COLUMNS: tuple[str, ...] = SIGNATURE_COLUMNS + tuple(
    f"{prefix}_{name}" for prefix in SERIES_PREFIXES.values() for name in DESCRIPTOR_NAMES
)
N_FEATURES = len(FEATURE_COLUMNS)


@dataclass(frozen=True)
class SeriesDescriptor:
    unique_count: float
    zero_count: float
    mean: float
    standard_error: float
    q01: float
    q05: float
    q25: float
    q50: float
    q75: float
    q95: float
    q99: float
    std_dev: float
    coeff_variation: float
    mad: float
    iqr: float
    skewness: float
    kurtosis: float
    min: float
    max: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DESCRIPTOR_NAMES], dtype=float)


def describe(series: Sequence[float] | np.ndarray) -> SeriesDescriptor:
    """Summarise a series with 19 distribution statistics.

    Conventions: population std, ``standard_error = std / sqrt(n)``,
    moment-based skewness and excess kurtosis, MAD about the median,
    linearly interpolated quantiles. Statistics that are undefined for the
    input (empty series, single value, zero mean for the coefficient of
    variation, zero variance for the shape moments) are NaN.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    nan = math.nan
    if n == 0:
        return SeriesDescriptor(*([nan] * len(DESCRIPTOR_NAMES)))

    unique_count = float(np.unique(x).size)
    zero_count = float(np.count_nonzero(x == 0.0))
    mean = float(np.mean(x))
    qs = np.quantile(x, QUANTILES)
    lo, hi = float(np.min(x)), float(np.max(x))
    if n == 1:
        return SeriesDescriptor(unique_count, zero_count, mean, nan, *map(float, qs), nan, nan, nan, nan, nan, nan, lo, hi)

    dev = x - mean
    m2 = float(np.mean(dev**2))
    std = math.sqrt(m2)
    se = std / math.sqrt(n)
    cv = std / mean if mean != 0.0 else nan
    median = float(qs[3])
    mad = float(np.median(np.abs(x - median)))
    iqr = float(qs[4] - qs[2])
    if std > 0.0:
        z = dev / std  # standardise first so tiny variances do not underflow
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4)) - 3.0
    else:
        skew = kurt = nan
    return SeriesDescriptor(unique_count, zero_count, mean, se, *map(float, qs), std, cv, mad, iqr, skew, kurt, lo, hi)


def _coords(points: Sequence[GeoPoint]) -> tuple[np.ndarray, np.ndarray]:
    lat = np.fromiter((p.latitude for p in points), dtype=float, count=len(points))
    lon = np.fromiter((p.longitude for p in points), dtype=float, count=len(points))
    return lat, lon


def _ratio(lat: np.ndarray, lon: np.ndarray) -> float:
    if lat.size < 2:
        return math.nan
    path = float(np.sum(haversine_array(lat[:-1], lon[:-1], lat[1:], lon[1:])))
    if path == 0.0:
        return 1.0
    chord = float(haversine_array(lat[0], lon[0], lat[-1], lon[-1]))
    return min(1.0, chord / path)


def effective_distance_ratio(points: Sequence[GeoPoint]) -> float:
    """Chord length over travelled path length; 1.0 for a stationary segment."""
    return _ratio(*_coords(points))


def segment_bounds(n_points: int, n_segments: int) -> list[tuple[int, int]]:
    """Inclusive point-index ranges splitting a path into chained pieces.

    The ``n_points - 1`` edges are shared out as evenly as possible, leading
    segments taking one extra edge each; consecutive ranges share their
    boundary point.
    """
    edges = max(n_points - 1, 0)
    base, extra = divmod(edges, n_segments)
    bounds = []
    start = 0
    for i in range(n_segments):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def distance_geometry_signature(t: Trajectory) -> np.ndarray:
    """Straightness at five resolutions: 15 ratios ordered (level, segment)."""
    lat, lon = t.latitudes, t.longitudes
    out = np.full(len(SIGNATURE_COLUMNS), math.nan)
    k = 0
    for level in range(1, SIGNATURE_LEVELS + 1):
        for a, b in segment_bounds(lat.size, level):
            if b > a:
                out[k] = _ratio(lat[a : b + 1], lon[a : b + 1])
            k += 1
    return out


def indentation_series(t: Trajectory) -> np.ndarray:
    """Unsigned turning angle (radians, [0, pi]) at each interior point."""
    lat, lon = t.latitudes, t.longitudes
    if lat.size < 3:
        return np.empty(0)
    bearing = initial_bearing_array(lat[:-1], lon[:-1], lat[1:], lon[1:])
    moved = (lat[:-1] != lat[1:]) | (lon[:-1] != lon[1:])
    turn = np.abs(np.angle(np.exp(1j * (bearing[1:] - bearing[:-1]))))
    turn[~(moved[1:] & moved[:-1])] = 0.0
    return turn


def speed_series(t: Trajectory) -> np.ndarray:
    """Metres per second over each consecutive pair of points."""
    lat, lon, ts = t.latitudes, t.longitudes, t.timestamps
    return haversine_array(lat[:-1], lon[:-1], lat[1:], lon[1:]) / np.diff(ts)


def acceleration_series(t: Trajectory) -> np.ndarray:
    """Change in speed per second between consecutive segment midpoints."""
    ts = t.timestamps
    if ts.size < 3:
        return np.empty(0)
    speed = speed_series(t)
    mid = (ts[:-1] + ts[1:]) / 2
    return np.diff(speed) / np.diff(mid)


def trajectory_features(t: Trajectory) -> np.ndarray:
    """The 72-value feature row for one trajectory."""
    parts = [distance_geometry_signature(t)]
    for fn in (indentation_series, speed_series, acceleration_series):
        parts.append(describe(fn(t)).as_array())
    return np.concatenate(parts)


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of feature values with per-column taxonomy tags.

    ``leaves`` holds the taxonomy leaf for each column (``None`` when
    untagged). ``missing`` is the NaN mask recorded at extraction and
    survives imputation.
    """

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray
    leaves: tuple[str | None, ...]
    missing: np.ndarray = field(default=None, compare=False)
    imputed: bool = False
    scaled: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (len(self.ids), len(self.columns)):
            raise ValueError(f"values shape {values.shape} does not match {len(self.ids)} rows x {len(self.columns)} columns")
        if len(self.labels) != len(self.ids) or len(self.leaves) != len(self.columns):
            raise ValueError("labels/leaves length mismatch")
        object.__setattr__(self, "values", values)
        if self.missing is None:
            object.__setattr__(self, "missing", np.isnan(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return len(self.ids)

    def take_rows(self, idx: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return replace(
            self,
            ids=tuple(self.ids[i] for i in idx),
            labels=tuple(self.labels[i] for i in idx),
            values=self.values[idx],
            missing=self.missing[idx],
        )

    def take_columns(self, idx: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return replace(
            self,
            columns=tuple(self.columns[i] for i in idx),
            leaves=tuple(self.leaves[i] for i in idx),
            values=self.values[:, idx],
            missing=self.missing[:, idx],
        )

    def with_values(self, values: np.ndarray, **flags) -> "FeatureMatrix":
        return replace(self, values=values, missing=self.missing, **flags)

    # -- serialisation -------------------------------------------------
    def to_csv(self, stream: IO[str]) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("trajectory_id", "label", *self.columns))
        for tid, label, row in zip(self.ids, self.labels, self.values):
            writer.writerow((tid, label, *("" if math.isnan(v) else repr(float(v)) for v in row)))

    def sidecar(self) -> dict:
        return {
            "columns": [{"name": c, "leaf": leaf} for c, leaf in zip(self.columns, self.leaves)],
            "rows": len(self.ids),
            "imputed": self.imputed,
            "scaled": self.scaled,
            "missing": {
                tid: [self.columns[j] for j in np.flatnonzero(mask)]
                for tid, mask in zip(self.ids, self.missing)
                if mask.any()
            },
        }

    def write(self, csv_path, sidecar_path) -> None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            self.to_csv(fh)
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read(cls, csv_path, sidecar_path=None) -> "FeatureMatrix":
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            ids, labels, rows = [], [], []
            for rec in reader:
                if not rec:
                    continue
                ids.append(rec[0])
                labels.append(rec[1])
                rows.append([float(v) if v != "" else math.nan for v in rec[2:]])
        columns = tuple(header[2:])
        leaves: tuple[str | None, ...] = (None,) * len(columns)
        missing = None
        imputed = scaled = False
        if sidecar_path is not None:
            with open(sidecar_path, encoding="utf-8") as fh:
                meta = json.load(fh)
            tag = {c["name"]: c["leaf"] for c in meta["columns"]}
            leaves = tuple(tag.get(c) for c in columns)
            imputed, scaled = meta.get("imputed", False), meta.get("scaled", False)
            if imputed:
                col_index = {c: j for j, c in enumerate(columns)}
                row_index = {t: i for i, t in enumerate(ids)}
                missing = np.zeros((len(ids), len(columns)), dtype=bool)
                for tid, cols in meta.get("missing", {}).items():
                    for c in cols:
                        missing[row_index[tid], col_index[c]] = True
        values = np.array(rows, dtype=float).reshape(len(ids), len(columns))
        return cls(tuple(ids), tuple(labels), columns, values, leaves, missing, imputed, scaled)


def extract_features(data: LabeledTrajectorySet | Iterable[Trajectory], taxonomy=None) -> FeatureMatrix:
    """One 72-column row per trajectory, in input order, tagged by taxonomy."""
    from trajtax.taxonomy import default_taxonomy

    trajectories = list(data)
    if not trajectories:
        raise ValueError("cannot extract features from an empty set")
    values = np.vstack([trajectory_features(t) for t in trajectories])
    tax = taxonomy or default_taxonomy()
    return FeatureMatrix(
        ids=tuple(t.id for t in trajectories),
        labels=tuple(t.label for t in trajectories),
        columns=FEATURE_COLUMNS,
        values=values,
        leaves=tax.tag(FEATURE_COLUMNS),
    )


# -- preprocessing ------------------------------------------------------


@dataclass(frozen=True)
class ImputeState:
    means: np.ndarray
    all_missing: tuple[int, ...]

    @classmethod
    def fit(cls, X: np.ndarray) -> "ImputeState":
        X = np.asarray(X, dtype=float)
        observed = ~np.isnan(X)
        counts = observed.sum(axis=0)
        sums = np.where(observed, X, 0.0).sum(axis=0)
        means = np.divide(sums, counts, out=np.zeros(X.shape[1]), where=counts > 0)
        return cls(means=means, all_missing=tuple(np.flatnonzero(counts == 0).tolist()))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        rows, cols = np.nonzero(np.isnan(X))
        X[rows, cols] = self.means[cols]
        return X


@dataclass(frozen=True)
class ScaleState:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "ScaleState":
        X = np.asarray(X, dtype=float)
        return cls(mean=X.mean(axis=0), std=X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros_like(X)
        ok = self.std > 0
        out[:, ok] = (X[:, ok] - self.mean[ok]) / self.std[ok]
        return out


def impute_fit_transform(train: FeatureMatrix, test: FeatureMatrix | None = None):
    """Mean-impute both matrices with statistics from ``train`` only.

    Columns with no observed training value are filled with 0.0 and listed
    in ``ImputeState.all_missing``.
    """
    if len(train) == 0:
        raise ValueError("empty training matrix")
    state = ImputeState.fit(train.values)
    new_train = train.with_values(state.transform(train.values), imputed=True)
    new_test = test.with_values(state.transform(test.values), imputed=True) if test is not None else None
    return new_train, new_test, state


def standardize_fit_transform(train: FeatureMatrix, test: FeatureMatrix | None = None):
    """Z-score both matrices with the training mean and population std."""
    state = ScaleState.fit(train.values)
    new_train = train.with_values(state.transform(train.values), scaled=True)
    new_test = test.with_values(state.transform(test.values), scaled=True) if test is not None else None
    return new_train, new_test, state
