"""Synthetic labelled trajectories with a controllable class signal."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from trajtax.trajectory import EARTH_RADIUS_M, GeoPoint, LabeledTrajectorySet, Trajectory


def destination(lat: float, lon: float, bearing: float, distance: float) -> tuple[float, float]:
    """Point reached from (lat, lon) in degrees after ``distance`` metres along ``bearing`` radians."""
    phi1, lam1 = math.radians(lat), math.radians(lon)
    delta = distance / EARTH_RADIUS_M
    phi2 = math.asin(math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(bearing))
    lam2 = lam1 + math.atan2(
        math.sin(bearing) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon2 = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return math.degrees(phi2), lon2


def planted_speed_set(
    n_per_class: int = 50,
    class_speeds: Sequence[float] = (2.0, 4.0, 6.0, 8.0),
    seed: int = 0,
    *,
    step_seconds: float = 60.0,
    points: tuple[int, int] = (30, 60),
    speed_noise: float = 0.5,
    turn_noise: float = 0.3,
) -> LabeledTrajectorySet:
    """Trajectories whose classes differ only in their typical speed.

    Step speeds are ``class_speed + N(0, speed_noise)`` at a fixed sampling
    interval, so accelerations (differences of the noise) and turning angles
    (a class-independent heading random walk) carry no class information.
    """
    rng = np.random.default_rng(seed)
    trajectories = []
    for ci, v in enumerate(class_speeds):
        label = f"class{ci}"
        for j in range(n_per_class):
            n = int(rng.integers(points[0], points[1] + 1))
            lat = float(rng.uniform(-60, 60))
            lon = float(rng.uniform(-170, 170))
            heading = float(rng.uniform(0, 2 * math.pi))
            t = float(rng.uniform(1.6e9, 1.7e9))
            level = v + float(rng.normal(0, 0.3))
            pts = [GeoPoint(lat, lon, t)]
            for _ in range(n - 1):
                speed = max(0.05, level + float(rng.normal(0, speed_noise)))
                heading += float(rng.normal(0, turn_noise))
                lat, lon = destination(lat, lon, heading, speed * step_seconds)
                t += step_seconds
                pts.append(GeoPoint(lat, lon, t))
            trajectories.append(Trajectory(f"{label}-{j:04d}", label, tuple(pts)))
    return LabeledTrajectorySet(tuple(trajectories))
