"""Trajectory records: parsing, normalisation, resampling and geodesy."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Sequence

import numpy as np

from trajtax.errors import EmptyInputError, ResampleError, SchemaError

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float
    timestamp: float  # epoch seconds

    def __post_init__(self):
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not math.isfinite(self.timestamp):
            raise ValueError(f"timestamp not finite: {self.timestamp}")


@dataclass(frozen=True)
class Trajectory:
    """A labelled, time-ordered movement track.

    Use :meth:`from_points` to build one from unordered points; the
    constructor assumes the points are already normalised.
    """

    id: str
    label: str
    points: tuple[GeoPoint, ...]

    @classmethod
    def from_points(cls, id: str, label: str, points: Iterable[GeoPoint]) -> "Trajectory":
        ordered = sorted(points, key=lambda p: p.timestamp)  # stable: first of a tie stays first
        kept: list[GeoPoint] = []
        for p in ordered:
            if kept and p.timestamp == kept[-1].timestamp:
                continue
            kept.append(p)
        if len(kept) < 2:
            raise ValueError(f"trajectory {id!r} has {len(kept)} distinct timestamps, need >= 2")
        return cls(id=id, label=label, points=tuple(kept))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def latitudes(self) -> np.ndarray:
        return np.fromiter((p.latitude for p in self.points), dtype=float, count=len(self.points))

    @property
    def longitudes(self) -> np.ndarray:
        return np.fromiter((p.longitude for p in self.points), dtype=float, count=len(self.points))

    @property
    def timestamps(self) -> np.ndarray:
        return np.fromiter((p.timestamp for p in self.points), dtype=float, count=len(self.points))


@dataclass(frozen=True)
class ParseReport:
    rows_read: int = 0
    rows_rejected: int = 0
    rejections: dict[str, int] = field(default_factory=dict)
    trajectories_rejected: tuple[str, ...] = ()


@dataclass(frozen=True)
class LabeledTrajectorySet:
    trajectories: tuple[Trajectory, ...]
    report: ParseReport = field(default_factory=ParseReport, compare=False)

    def __post_init__(self):
        ids = [t.id for t in self.trajectories]
        if len(set(ids)) != len(ids):
            dupes = sorted(k for k, v in Counter(ids).items() if v > 1)
            raise ValueError(f"duplicate trajectory ids: {dupes[:5]}")

    @property
    def label_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(t.label for t in self.trajectories).items()))

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.trajectories]

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the five required input columns plus the delimiter."""

    trajectory_id: str = "trajectory_id"
    latitude: str = "latitude"
    longitude: str = "longitude"
    timestamp: str = "timestamp"
    label: str = "label"
    delimiter: str = ","

    @property
    def required(self) -> tuple[str, ...]:
        return (self.trajectory_id, self.latitude, self.longitude, self.timestamp, self.label)


def parse_timestamp(text: str) -> float:
    """Parse epoch seconds or ISO-8601 into epoch seconds.

    Naive ISO timestamps are taken as UTC.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    try:
        value = float(text)
    except ValueError:
        pass
    else:
        if not math.isfinite(value):
            raise ValueError(f"non-finite timestamp {text!r}")
        return value
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def parse_trajectory_csv(stream: IO, schema: ColumnMapping | None = None) -> LabeledTrajectorySet:
    """Read delimited text into a normalised trajectory set.

    Rows with bad coordinates or timestamps are skipped and counted in the
    set's ``report``; trajectories with fewer than two distinct timestamps
    are dropped with a diagnostic.
    """
    schema = schema or ColumnMapping()
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if not isinstance(stream, io.TextIOBase):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    reader = csv.DictReader(stream, delimiter=schema.delimiter)
    header = reader.fieldnames or []
    missing = [c for c in schema.required if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)} (header: {header})")

    groups: dict[str, list[GeoPoint]] = {}
    labels: dict[str, str] = {}
    rejections: Counter[str] = Counter()
    rows = 0
    for lineno, row in enumerate(reader, start=2):
        rows += 1
        tid = (row.get(schema.trajectory_id) or "").strip()
        label = (row.get(schema.label) or "").strip()
        if not tid or not label:
            rejections["missing id or label"] += 1
            continue
        try:
            lat = float(row[schema.latitude])
            lon = float(row[schema.longitude])
        except (TypeError, ValueError):
            rejections["unparseable coordinate"] += 1
            continue
        if not (math.isfinite(lat) and math.isfinite(lon)) or not (-90 <= lat <= 90) or not (-180 <= lon <= 180):
            rejections["coordinate out of bounds"] += 1
            continue
        try:
            ts = parse_timestamp(row[schema.timestamp] or "")
        except (TypeError, ValueError):
            rejections["unparseable timestamp"] += 1
            continue
        if tid in labels and labels[tid] != label:
            rejections["label conflict within trajectory"] += 1
            logger.warning("line %d: trajectory %s changes label %s -> %s; row skipped", lineno, tid, labels[tid], label)
            continue
        labels.setdefault(tid, label)
        groups.setdefault(tid, []).append(GeoPoint(lat, lon, ts))

    trajectories = []
    too_short = []
    for tid, points in groups.items():
        try:
            trajectories.append(Trajectory.from_points(tid, labels[tid], points))
        except ValueError:
            too_short.append(tid)
    if too_short:
        logger.warning("dropped %d trajectories with fewer than 2 distinct timestamps", len(too_short))
    if not trajectories:
        raise EmptyInputError("no valid trajectories in input")
    report = ParseReport(
        rows_read=rows,
        rows_rejected=sum(rejections.values()),
        rejections=dict(rejections),
        trajectories_rejected=tuple(too_short),
    )
    return LabeledTrajectorySet(tuple(trajectories), report)


def write_trajectory_csv(data: LabeledTrajectorySet, stream: IO[str], schema: ColumnMapping | None = None) -> None:
    """Write a set back out with epoch-second timestamps (lossless for floats)."""
    schema = schema or ColumnMapping()
    writer = csv.writer(stream, delimiter=schema.delimiter, lineterminator="\n")
    writer.writerow(schema.required)
    for t in data:
        for p in t.points:
            writer.writerow([t.id, repr(p.latitude), repr(p.longitude), repr(p.timestamp), t.label])


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres on a sphere of mean Earth radius."""
    lat1, lat2 = math.radians(a.latitude), math.radians(b.latitude)
    dlat = lat2 - lat1
    dlon = math.radians(b.longitude - a.longitude)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_array(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Vectorised haversine over degree arrays, metres."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def initial_bearing_array(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Initial great-circle bearing in radians, in (-pi, pi], 0 = north."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    dlon = lon2 - lon1
    x = np.sin(dlon) * np.cos(lat2)
    y = np.cos(lat1) * np.sin(lat2) - np.sin(lat1) * np.cos(lat2) * np.cos(dlon)
    return np.arctan2(x, y)


def resample_set(
    data: LabeledTrajectorySet,
    per_class: int,
    seed: int,
    *,
    top_k: int | None = None,
    classes: Sequence[str] | None = None,
    replace: bool = False,
) -> LabeledTrajectorySet:
    """Draw ``per_class`` trajectories from each retained class.

    Retained classes are ``classes`` if given, else the ``top_k`` most
    frequent (ties by label), else all. With ``replace=True`` repeated
    draws get ``#n`` id suffixes to keep ids unique.
    """
    counts = data.label_counts
    if classes is not None:
        unknown = [c for c in classes if c not in counts]
        if unknown:
            raise ResampleError(f"unknown classes: {unknown}")
        keep = sorted(classes)
    elif top_k is not None:
        keep = sorted(sorted(counts, key=lambda c: (-counts[c], c))[:top_k])
    else:
        keep = sorted(counts)
    if not replace:
        for c in keep:
            if counts[c] < per_class:
                raise ResampleError(f"class {c!r} has {counts[c]} trajectories, fewer than per_class={per_class}")

    rng = np.random.default_rng(seed)
    by_class = {c: [t for t in data if t.label == c] for c in keep}
    chosen: list[Trajectory] = []
    for c in keep:
        members = by_class[c]
        picks = rng.choice(len(members), size=per_class, replace=replace)
        seen: Counter[int] = Counter()
        for i in sorted(picks.tolist()):
            t = members[i]
            seen[i] += 1
            if seen[i] > 1:
                t = Trajectory(id=f"{t.id}#{seen[i] - 1}", label=t.label, points=t.points)
            chosen.append(t)
    return LabeledTrajectorySet(tuple(chosen), data.report)
