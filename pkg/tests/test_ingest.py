import warnings
from datetime import timedelta

import numpy as np
import pytest

from actdetect import (
    ActivityMap,
    LoadTable,
    TemperatureSeries,
    align_and_fill,
    bundle_activities,
    build_windows,
    default_activity_map,
    parse_labels_csv,
    parse_load_csv,
    parse_weather_csv,
    window_labels,
    write_labels_csv,
    write_load_csv,
    write_weather_csv,
)
from actdetect.errors import (
    AllGaps,
    DuplicateTimestamp,
    IncompleteWindowWarning,
    MissingHeader,
    NegativePower,
    NonMonotoneTimestamps,
    NoOverlap,
    OverlappingActivityMap,
    UnknownAppliance,
)
from conftest import T0, hours


def ts(minute):
    return (T0 + timedelta(minutes=minute)).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_csv(path, header, rows):
    path.write_text("\n".join([header] + rows) + "\n")
    return path


def make_table(columns, minutes=120, metered=None, observed=None):
    values = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    if metered is None:
        aggregate = values.sum(axis=1)
    else:
        aggregate = np.asarray(metered, dtype=float)
    return LoadTable(
        consumer_id="t",
        start=T0,
        appliances=list(columns),
        values=values,
        aggregate=aggregate,
        aggregate_derived=metered is None,
        observed=observed,
    )


class TestParseLoadCsv:
    def test_two_row_single_column_sums_to_aggregate(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "timestamp,oven", [f"{ts(0)},0.5", f"{ts(1)},0.7"])
        table = parse_load_csv(p)
        assert table.n_rows == 2
        assert table.appliances == ["oven"]
        assert table.aggregate_derived
        np.testing.assert_allclose(table.aggregate, [0.5, 0.7])

    def test_duplicate_timestamp_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "timestamp,oven", [f"{ts(0)},0.5", f"{ts(0)},0.7"])
        with pytest.raises(DuplicateTimestamp):
            parse_load_csv(p)

    def test_non_monotone_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "timestamp,oven", [f"{ts(5)},0.5", f"{ts(0)},0.7"])
        with pytest.raises(NonMonotoneTimestamps):
            parse_load_csv(p)

    def test_negative_power_reports_row(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "timestamp,oven", [f"{ts(0)},0.5", f"{ts(1)},-0.1"])
        with pytest.raises(NegativePower, match="row 3"):
            parse_load_csv(p)

    def test_missing_header_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "time,oven", [f"{ts(0)},0.5"])
        with pytest.raises(MissingHeader):
            parse_load_csv(p)

    def test_metered_aggregate_column_used(self, tmp_path):
        p = write_csv(
            tmp_path / "a.csv",
            "timestamp,oven,aggregate",
            [f"{ts(0)},0.5,0.9", f"{ts(1)},0.7,1.1"],
        )
        table = parse_load_csv(p)
        assert not table.aggregate_derived
        np.testing.assert_allclose(table.aggregate, [0.9, 1.1])
        assert table.appliances == ["oven"]

    def test_gap_rows_marked_unobserved(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", "timestamp,oven", [f"{ts(0)},0.5", f"{ts(3)},0.7"])
        table = parse_load_csv(p)
        assert table.n_rows == 4
        assert table.observed.tolist() == [True, False, False, True]

    def test_synth_day_round_trips_exactly(self, tmp_path, small_corpus):
        src = small_corpus.load
        path = tmp_path / "day.csv"
        write_load_csv(src, path)
        back = parse_load_csv(path)
        assert back.appliances == src.appliances
        np.testing.assert_array_equal(back.values, src.values)
        np.testing.assert_array_equal(back.aggregate, src.aggregate)
        # serialize -> parse -> serialize is byte-stable
        path2 = tmp_path / "day2.csv"
        write_load_csv(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_weather_round_trip(self, tmp_path, small_corpus):
        path = tmp_path / "w.csv"
        write_weather_csv(small_corpus.temperature, path)
        back = parse_weather_csv(path)
        assert back.step_seconds == 60
        np.testing.assert_array_equal(back.values, small_corpus.temperature.values)


class TestAlignAndFill:
    def test_identity_when_spans_match(self):
        table = make_table({"a": np.linspace(0.1, 1.0, 120)})
        temp = TemperatureSeries(start=T0, step_seconds=60, values=np.full(120, 20.0))
        aligned = align_and_fill(table, temp)
        assert aligned.load.start == table.start
        assert aligned.load.n_rows == 120
        np.testing.assert_array_equal(aligned.load.values, table.values)
        assert aligned.usable.all()

    def test_single_missing_minute_is_neighbor_mean(self):
        observed = np.ones(120, dtype=bool)
        observed[30] = False
        col = np.linspace(1.0, 2.0, 120)
        col[30] = 0.0
        table = make_table({"a": col}, observed=observed)
        aligned = align_and_fill(table, None, max_gap=5)
        expected = 0.5 * (col[29] + col[31])
        assert aligned.load.values[30, 0] == pytest.approx(expected)
        assert aligned.usable.all()

    def test_long_gap_excludes_containing_window_only(self):
        observed = np.ones(240, dtype=bool)
        observed[70:80] = False  # 10-minute gap inside window 1
        col = np.ones(240)
        table = make_table({"a": col}, minutes=240, observed=observed)
        aligned = align_and_fill(table, None, max_gap=5)
        windows = build_windows(aligned)
        starts = [w.start for w in windows]
        assert T0 + timedelta(hours=1) not in starts
        assert T0 in starts and T0 + timedelta(hours=2) in starts

    def test_no_overlap_raises(self):
        table = make_table({"a": np.ones(120)})
        temp = TemperatureSeries(
            start=T0 + timedelta(days=2), step_seconds=60, values=np.full(120, 20.0)
        )
        with pytest.raises(NoOverlap):
            align_and_fill(table, temp)

    def test_all_gaps_raises(self):
        observed = np.zeros(120, dtype=bool)
        observed[[0, 119]] = True
        table = make_table({"a": np.ones(120)}, observed=observed)
        with pytest.raises(AllGaps):
            align_and_fill(table, None, max_gap=5)

    def test_hourly_weather_interpolates_to_minutes(self):
        table = make_table({"a": np.ones(180)}, minutes=180)
        temp = TemperatureSeries(
            start=T0, step_seconds=3600, values=np.array([10.0, 20.0, 30.0])
        )
        aligned = align_and_fill(table, temp)
        assert aligned.temp.values[0] == pytest.approx(10.0)
        assert aligned.temp.values[30] == pytest.approx(15.0)
        assert aligned.temp.values[60] == pytest.approx(20.0)


class TestBundleActivities:
    def test_two_appliances_sum(self):
        table = make_table({"furnace": [0.3] * 120, "compressor": [1.2] * 120})
        amap = ActivityMap({"heating": ("furnace", "compressor")})
        bundled = bundle_activities(table, amap)
        np.testing.assert_allclose(bundled.column("heating"), 1.5)

    def test_overlapping_map_rejected_at_construction(self):
        with pytest.raises(OverlappingActivityMap):
            ActivityMap({"heating": ("furnace",), "cooling": ("furnace",)})

    def test_unknown_appliance_rejected(self):
        table = make_table({"oven": np.ones(120)})
        with pytest.raises(UnknownAppliance):
            bundle_activities(table, ActivityMap({"laundry": ("washer",)}))

    def test_default_map_energy_matches_generator_ground_truth(self, small_corpus):
        bundled = bundle_activities(small_corpus.load, default_activity_map())
        config = small_corpus.config
        for ai, activity in enumerate(config.activities):
            expected = np.zeros(small_corpus.load.n_rows)
            for appliance in activity.appliances:
                expected += small_corpus.load.column(appliance.name)
            np.testing.assert_allclose(bundled.column(activity.name), expected, atol=1e-12)

    def test_energy_conservation_with_derived_aggregate(self, rng):
        cols = {f"a{i}": rng.random(120) for i in range(4)}
        table = make_table(cols)
        amap = ActivityMap({"x": ("a0", "a2")})
        bundled = bundle_activities(table, amap)
        total = bundled.values.sum(axis=1)
        np.testing.assert_allclose(total, table.aggregate, atol=1e-9)


class TestWindowLabels:
    def test_all_zero_hour_inactive(self):
        table = make_table({"a": np.zeros(60)}, minutes=60)
        labels = window_labels(table, "a")
        assert labels.active.tolist() == [False]

    def test_constant_one_kw_active(self):
        table = make_table({"a": np.ones(60)}, minutes=60)
        labels = window_labels(table, "a", threshold=0.05)
        assert labels.active.tolist() == [True]

    def test_mean_exactly_at_threshold_is_inactive(self):
        table = make_table({"a": np.full(60, 0.05)}, minutes=60)
        labels = window_labels(table, "a", threshold=0.05)
        assert labels.active.tolist() == [False]

    def test_trailing_partial_hour_warns_and_drops(self):
        table = make_table({"a": np.ones(90)}, minutes=90)
        with pytest.warns(IncompleteWindowWarning):
            labels = window_labels(table, "a")
        assert len(labels) == 1

    def test_depends_only_on_window_mean(self, rng):
        base = rng.random(60)
        shuffled = rng.permutation(base)
        t1 = make_table({"a": base}, minutes=60)
        t2 = make_table({"a": shuffled}, minutes=60)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert window_labels(t1, "a").active.tolist() == window_labels(t2, "a").active.tolist()


class TestLabelCsv:
    def test_round_trip(self, tmp_path, small_corpus):
        path = tmp_path / "labels.csv"
        series = list(small_corpus.labels.values())
        write_labels_csv(series, path)
        back = parse_labels_csv(path)
        assert set(back) == set(small_corpus.labels)
        for name, original in small_corpus.labels.items():
            assert back[name].starts == original.starts
            np.testing.assert_array_equal(back[name].active, original.active)
