import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import haversine_oracle
from trajtax.errors import EmptyInputError, ResampleError, SchemaError
from trajtax.trajectory import (
    ColumnMapping,
    GeoPoint,
    LabeledTrajectorySet,
    Trajectory,
    haversine_distance,
    parse_timestamp,
    parse_trajectory_csv,
    resample_set,
    write_trajectory_csv,
)

HEADER = "trajectory_id,latitude,longitude,timestamp,label\n"


def parse(text, schema=None):
    return parse_trajectory_csv(io.BytesIO(text.encode()), schema)


def test_label_counts_from_rows():
    rows = []
    for i in range(38):
        rows += [f"f{i},10,10,0,F\n", f"f{i},10.1,10,60,F\n"]
    for i in range(28):
        rows += [f"m{i},10,10,0,M\n", f"m{i},10.1,10,60,M\n"]
    data = parse(HEADER + "".join(rows))
    assert data.label_counts == {"F": 38, "M": 28}
    assert len(data) == 66


def test_out_of_order_rows_are_sorted():
    data = parse(HEADER + "a,1,1,100,x\na,0,0,50,x\n")
    t = data.trajectories[0]
    assert list(t.timestamps) == [50.0, 100.0]
    assert t.points[0].latitude == 0.0


def test_out_of_bounds_latitude_rejected():
    data = parse(HEADER + "a,0,0,0,x\na,91.0,0,10,x\na,1,0,20,x\n")
    assert data.report.rows_rejected == 1
    assert data.report.rejections == {"coordinate out of bounds": 1}
    assert len(data.trajectories[0]) == 2


def test_unparseable_timestamp_skipped_and_counted():
    data = parse(HEADER + "a,0,0,0,x\na,0,1,yesterday,x\na,1,0,20,x\n")
    assert data.report.rejections == {"unparseable timestamp": 1}


def test_missing_column_is_schema_error():
    with pytest.raises(SchemaError, match="label"):
        parse("trajectory_id,latitude,longitude,timestamp\na,0,0,0\n")


def test_no_valid_trajectories():
    with pytest.raises(EmptyInputError):
        parse(HEADER + "a,0,0,0,x\n")  # single point only
    with pytest.raises(EmptyInputError):
        parse(HEADER)


def test_duplicate_timestamps_keep_first():
    data = parse(HEADER + "a,0,0,0,x\na,5,5,0,x\na,1,1,10,x\n")
    t = data.trajectories[0]
    assert len(t) == 2
    assert t.points[0].latitude == 0.0
    assert np.all(np.diff(t.timestamps) > 0)


def test_short_trajectory_dropped_with_report():
    data = parse(HEADER + "a,0,0,0,x\na,0,1,10,x\nb,0,0,0,x\n")
    assert [t.id for t in data] == ["a"]
    assert data.report.trajectories_rejected == ("b",)


def test_remapped_columns_and_delimiter():
    schema = ColumnMapping("id", "lat", "lon", "time", "sex", delimiter=";")
    data = parse("id;lat;lon;time;sex\nq;0;0;2020-01-01T00:00:00Z;F\nq;0;1;2020-01-01T00:01:00;F\n", schema)
    assert data.trajectories[0].timestamps.tolist() == [1577836800.0, 1577836860.0]


def test_parse_timestamp_forms():
    assert parse_timestamp("1577836800") == 1577836800.0
    assert parse_timestamp("2020-01-01T00:00:00+01:00") == 1577836800.0 - 3600
    assert parse_timestamp("2020-01-01 00:00:00") == 1577836800.0
    with pytest.raises(ValueError):
        parse_timestamp("not a time")


def test_conflicting_label_rows_skipped():
    data = parse(HEADER + "a,0,0,0,x\na,0,1,10,y\na,1,1,20,x\n")
    assert data.trajectories[0].label == "x"
    assert data.report.rejections == {"label conflict within trajectory": 1}


coord = st.tuples(st.floats(-89, 89), st.floats(-179, 179))


@given(st.lists(st.lists(coord, min_size=2, max_size=6), min_size=1, max_size=4))
def test_parse_write_parse_round_trip(tracks):
    trajs = []
    for k, pts in enumerate(tracks):
        trajs.append(Trajectory(f"id{k}", "ab"[k % 2], tuple(GeoPoint(a, b, 10.0 * i) for i, (a, b) in enumerate(pts))))
    original = LabeledTrajectorySet(tuple(trajs))
    buf = io.StringIO()
    write_trajectory_csv(original, buf)
    again = parse(buf.getvalue())
    assert again.trajectories == original.trajectories
    buf2 = io.StringIO()
    write_trajectory_csv(again, buf2)
    assert parse(buf2.getvalue()).trajectories == original.trajectories


# -- haversine ---------------------------------------------------------


def test_haversine_identity():
    p = GeoPoint(12.5, -33.1, 0)
    assert haversine_distance(p, p) == 0.0


def test_haversine_one_degree_on_equator():
    d = haversine_distance(GeoPoint(0, 0, 0), GeoPoint(0, 1, 0))
    assert abs(d - 111_195) <= 1
    assert abs(d - haversine_oracle(0, 0, 0, 1)) < 1e-6


def test_haversine_antipodal():
    d = haversine_distance(GeoPoint(0, 0, 0), GeoPoint(0, 180, 0))
    assert abs(d - 20_015_087) <= 10
    assert abs(d - math.pi * 6_371_000) < 1e-6


@given(coord, coord)
def test_haversine_matches_vector_oracle(a, b):
    d = haversine_distance(GeoPoint(*a, 0), GeoPoint(*b, 0))
    assert abs(d - haversine_oracle(*a, *b)) <= 1e-6 * max(1.0, d) + 1e-3


@given(coord, coord, coord)
def test_haversine_metric_properties(a, b, c):
    pa, pb, pc = (GeoPoint(*x, 0) for x in (a, b, c))
    ab, ba = haversine_distance(pa, pb), haversine_distance(pb, pa)
    assert ab >= 0
    assert ab == pytest.approx(ba, rel=1e-12, abs=1e-9)
    assert haversine_distance(pa, pc) <= (ab + haversine_distance(pb, pc)) * (1 + 1e-6) + 1e-6


# -- resampling --------------------------------------------------------


def _population():
    trajs = []
    for lab, n in (("WP", 30), ("SI", 25), ("NI", 22), ("EP", 21), ("SP", 20), ("XX", 3)):
        for i in range(n):
            trajs.append(Trajectory(f"{lab}{i}", lab, (GeoPoint(0, 0, 0), GeoPoint(0, 1, 10))))
    return LabeledTrajectorySet(tuple(trajs))


def test_resample_top_k_per_class():
    out = resample_set(_population(), 20, seed=42, top_k=5)
    assert out.label_counts == {"EP": 20, "NI": 20, "SI": 20, "SP": 20, "WP": 20}
    assert len(out) == 100


def test_resample_is_deterministic():
    a = resample_set(_population(), 10, seed=42, top_k=5)
    b = resample_set(_population(), 10, seed=42, top_k=5)
    assert sorted(t.id for t in a) == sorted(t.id for t in b)
    c = resample_set(_population(), 10, seed=43, top_k=5)
    assert sorted(t.id for t in a) != sorted(t.id for t in c)


def test_resample_full_class_is_identity():
    pop = _population()
    out = resample_set(pop, 20, seed=1, classes=["SP"])
    assert sorted(t.id for t in out) == sorted(t.id for t in pop if t.label == "SP")


def test_resample_too_small_class_names_it():
    with pytest.raises(ResampleError, match="XX"):
        resample_set(_population(), 5, seed=0)


def test_resample_with_replacement_keeps_ids_unique():
    out = resample_set(_population(), 10, seed=0, classes=["XX"], replace=True)
    assert len(out) == 10
    assert len({t.id for t in out}) == 10
