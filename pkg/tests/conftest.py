import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trajtax.trajectory import GeoPoint, LabeledTrajectorySet, Trajectory

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_traj(coords, times=None, tid="t", label="a"):
    """Trajectory from (lat, lon) pairs; one-minute spacing unless times given."""
    if times is None:
        times = [60.0 * i for i in range(len(coords))]
    return Trajectory(tid, label, tuple(GeoPoint(float(a), float(b), float(t)) for (a, b), t in zip(coords, times)))


def equator_line(n, step_deg=1.0):
    return make_traj([(0.0, step_deg * i) for i in range(n)])


def haversine_oracle(lat1, lon1, lat2, lon2, r=6_371_000.0):
    """Independent great-circle distance via the vector chord (no haversine term)."""
    def unit(lat, lon):
        la, lo = math.radians(lat), math.radians(lon)
        return np.array([math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la)])

    u, v = unit(lat1, lon1), unit(lat2, lon2)
    return r * math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v)))


@pytest.fixture
def blobs():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(-3, 1, size=(60, 2)), rng.normal(3, 1, size=(60, 2))])
    y = ["a"] * 60 + ["b"] * 60
    return X, y


@pytest.fixture
def small_set():
    trajs = []
    rng = np.random.default_rng(0)
    for lab in ("x", "y"):
        for i in range(6):
            coords = np.cumsum(rng.normal(0, 0.01, size=(8, 2)), axis=0)
            trajs.append(make_traj(coords, tid=f"{lab}{i}", label=lab))
    return LabeledTrajectorySet(tuple(trajs))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
