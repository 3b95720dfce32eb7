"""CSV ingestion, grid alignment, appliance-to-activity bundling, and window labeling.

All series live on a fixed 60-second grid in UTC. Detection windows are clock-hour
aligned runs of 60 consecutive minute samples.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import (
    AllGaps,
    DuplicateTimestamp,
    IncompleteWindowWarning,
    InvalidLoadTable,
    MalformedRow,
    MissingHeader,
    NegativePower,
    NoOverlap,
    NonMonotoneTimestamps,
    OverlappingActivityMap,
    UnknownAppliance,
)
from .util import MINUTE, atomic_write_text, format_float, format_timestamp, parse_timestamp

DEFAULT_LABEL_THRESHOLD_KW = 0.05
DEFAULT_MAX_GAP_MINUTES = 5

AGGREGATE_COLUMN = "aggregate"

ACTIVE = "active"
INACTIVE = "inactive"


def _require_minute_aligned(ts: datetime, row: int, path: str) -> None:
    if ts.second != 0 or ts.microsecond != 0:
        raise MalformedRow(f"{path}: row {row}: timestamp {ts.isoformat()} is not minute-aligned")


@dataclass
class LoadTable:
    """Minute-resolution per-appliance power readings for one consumer.

    `values` has one row per minute on the dense grid starting at `start`;
    `observed` marks rows that came from the source (gap rows hold zeros).
    `aggregate` is either metered (a source column named 'aggregate') or the
    per-minute row sum of the appliance columns.
    """

    consumer_id: str
    start: datetime
    appliances: list[str]
    values: np.ndarray
    aggregate: np.ndarray
    aggregate_derived: bool
    observed: np.ndarray = field(default=None)  # type: ignore[assignment]
    step_seconds: int = MINUTE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.aggregate = np.asarray(self.aggregate, dtype=float)
        if self.observed is None:
            self.observed = np.ones(len(self.values), dtype=bool)
        self.observed = np.asarray(self.observed, dtype=bool)
        self.validate()

    def validate(self) -> None:
        n = self.values.shape[0]
        if n < 1:
            raise InvalidLoadTable("load table has no rows")
        if self.values.shape[1] != len(self.appliances):
            raise InvalidLoadTable("column count does not match appliance names")
        if self.aggregate.shape != (n,) or self.observed.shape != (n,):
            raise InvalidLoadTable("aggregate/observed length does not match row count")
        if not np.all(np.isfinite(self.values)) or not np.all(np.isfinite(self.aggregate)):
            raise InvalidLoadTable("power values must be finite")
        if np.any(self.values < 0) or np.any(self.aggregate < 0):
            raise NegativePower("power values must be non-negative")
        if self.start.tzinfo is None or self.start.second or self.start.microsecond:
            raise InvalidLoadTable("start must be a minute-aligned aware UTC timestamp")
        if self.aggregate_derived:
            resum = self.values.sum(axis=1)
            if not np.allclose(self.aggregate, resum, rtol=0.0, atol=1e-9):
                raise InvalidLoadTable("derived aggregate does not equal appliance row sums")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(seconds=index * self.step_seconds)

    def column(self, name: str) -> np.ndarray:
        if name == AGGREGATE_COLUMN:
            return self.aggregate
        try:
            return self.values[:, self.appliances.index(name)]
        except ValueError:
            raise UnknownAppliance(f"no column named {name!r}") from None


@dataclass
class TemperatureSeries:
    """Ambient temperature samples on a regular grid whose step divides one hour."""

    start: datetime
    step_seconds: int
    values: np.ndarray
    observed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.observed is None:
            self.observed = np.ones(len(self.values), dtype=bool)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.step_seconds <= 0 or 3600 % self.step_seconds != 0:
            raise MalformedRow(f"temperature step {self.step_seconds}s must divide 3600s")
        if not np.all(np.isfinite(self.values[self.observed])):
            raise MalformedRow("temperature values must be finite")

    @property
    def n_rows(self) -> int:
        return len(self.values)

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(seconds=index * self.step_seconds)


@dataclass
class ActivityMap:
    """Mapping from activity name to the appliance columns it bundles."""

    entries: dict[str, tuple[str, ...]]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for activity, appliances in self.entries.items():
            if not appliances:
                raise OverlappingActivityMap(f"activity {activity!r} has no appliances")
            for appliance in appliances:
                if appliance in seen:
                    raise OverlappingActivityMap(
                        f"appliance {appliance!r} appears in both "
                        f"{seen[appliance]!r} and {activity!r}"
                    )
                seen[appliance] = activity
        self.entries = {name: tuple(apps) for name, apps in self.entries.items()}

    @classmethod
    def from_json(cls, path: Path | str) -> "ActivityMap":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        return cls({str(k): tuple(v) for k, v in raw.items()})

    def to_json(self, path: Path | str) -> None:
        atomic_write_text(Path(path), json.dumps({k: list(v) for k, v in self.entries.items()}, indent=2) + "\n")


def default_activity_map() -> ActivityMap:
    """Shipped appliance bundling: six household activities."""
    return ActivityMap(
        {
            "sleeping": ("bedroom_light",),
            "grooming": ("hair_dryer",),
            "food-preparing": ("oven", "microwave"),
            "dish-washing": ("dishwasher",),
            "laundry": ("washer", "dryer"),
            "cooling-heating": ("furnace", "compressor"),
        }
    )


@dataclass
class LabelSeries:
    """Per-window active/inactive labels for one activity.

    Window starts are hour-aligned and strictly increasing; windows excluded
    upstream (gaps) are simply absent.
    """

    activity: str
    starts: list[datetime]
    active: np.ndarray

    def __post_init__(self):
        self.active = np.asarray(self.active, dtype=bool)
        if len(self.starts) != len(self.active):
            raise MalformedRow("label count does not match window count")
        prev = None
        for ts in self.starts:
            if ts.minute or ts.second or ts.microsecond:
                raise MalformedRow(f"window start {ts.isoformat()} is not hour-aligned")
            if prev is not None and ts <= prev:
                raise NonMonotoneTimestamps("window starts must be strictly increasing")
            prev = ts

    def __len__(self) -> int:
        return len(self.starts)

    def as_dict(self) -> dict[datetime, bool]:
        return dict(zip(self.starts, self.active.tolist()))


@dataclass
class WindowRecord:
    """One detection window: 60 minute samples of aggregate load."""

    start: datetime
    samples: np.ndarray
    temp_mean: float | None = None
    label: bool | None = None


@dataclass
class AlignedData:
    """Load and (optional) temperature on a common minute grid plus a usability mask."""

    load: LoadTable
    temp: TemperatureSeries | None
    usable: np.ndarray


# --- CSV parsing -----------------------------------------------------------


def _read_rows(path: Path | str, expected_first: str):
    path = str(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingHeader(f"{path}: empty file") from None
        if not header or header[0].strip() != expected_first or len(header) < 2:
            raise MissingHeader(
                f"{path}: expected header '{expected_first},<name>...', got {','.join(header)!r}"
            )
        names = [cell.strip() for cell in header[1:]]
        times: list[datetime] = []
        rows: list[list[float]] = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise MalformedRow(f"{path}: row {lineno}: expected {len(header)} fields, got {len(cells)}")
            try:
                ts = parse_timestamp(cells[0])
            except ValueError as exc:
                raise MalformedRow(f"{path}: row {lineno}: bad timestamp {cells[0]!r}") from exc
            if times:
                if ts == times[-1]:
                    raise DuplicateTimestamp(f"{path}: row {lineno}: timestamp {cells[0]} repeated")
                if ts < times[-1]:
                    raise NonMonotoneTimestamps(f"{path}: row {lineno}: timestamps not ascending")
            try:
                values = [float(c) for c in cells[1:]]
            except ValueError as exc:
                raise MalformedRow(f"{path}: row {lineno}: non-numeric value") from exc
            if not all(np.isfinite(values)):
                raise MalformedRow(f"{path}: row {lineno}: non-finite value")
            times.append(ts)
            rows.append(values)
        if not rows:
            raise MissingHeader(f"{path}: no data rows")
        return names, times, rows


def parse_load_csv(path: Path | str, consumer_id: str | None = None) -> LoadTable:
    """Parse a `timestamp,<appliance>...` CSV into a LoadTable.

    Timestamps must be minute-aligned and strictly ascending; missing minutes
    become unobserved gap rows. A column literally named 'aggregate' is used
    as the metered total, otherwise the aggregate is derived as the row sum.
    """
    names, times, rows = _read_rows(path, "timestamp")
    for lineno, (ts, values) in enumerate(zip(times, rows), start=2):
        _require_minute_aligned(ts, lineno, str(path))
        for name, value in zip(names, values):
            if value < 0:
                raise NegativePower(f"{path}: row {lineno}: negative power {value} in column {name!r}")

    start = times[0]
    n = int((times[-1] - start).total_seconds()) // MINUTE + 1
    values = np.zeros((n, len(names)), dtype=float)
    observed = np.zeros(n, dtype=bool)
    for ts, row in zip(times, rows):
        idx = int((ts - start).total_seconds()) // MINUTE
        values[idx] = row
        observed[idx] = True

    if AGGREGATE_COLUMN in names:
        agg_idx = names.index(AGGREGATE_COLUMN)
        aggregate = values[:, agg_idx].copy()
        keep = [i for i in range(len(names)) if i != agg_idx]
        appliance_names = [names[i] for i in keep]
        values = values[:, keep]
        derived = False
    else:
        appliance_names = names
        aggregate = values.sum(axis=1)
        derived = True

    return LoadTable(
        consumer_id=consumer_id or Path(path).stem,
        start=start,
        appliances=appliance_names,
        values=values,
        aggregate=aggregate,
        aggregate_derived=derived,
        observed=observed,
    )


def write_load_csv(table: LoadTable, path: Path | str) -> None:
    """Write a LoadTable back to CSV (observed rows only; exact round-trip)."""
    columns = list(table.appliances)
    if not table.aggregate_derived:
        columns.append(AGGREGATE_COLUMN)
    lines = ["timestamp," + ",".join(columns)]
    for i in np.flatnonzero(table.observed):
        cells = [format_timestamp(table.time_at(int(i)))]
        cells += [format_float(v) for v in table.values[i]]
        if not table.aggregate_derived:
            cells.append(format_float(table.aggregate[i]))
        lines.append(",".join(cells))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def parse_weather_csv(path: Path | str) -> TemperatureSeries:
    """Parse a `timestamp,temperature_c` CSV; grid step is inferred from the rows."""
    names, times, rows = _read_rows(path, "timestamp")
    if names != ["temperature_c"]:
        raise MissingHeader(f"{path}: expected header 'timestamp,temperature_c'")
    if len(times) < 2:
        raise MalformedRow(f"{path}: need at least two samples to infer the grid step")
    diffs = [int((b - a).total_seconds()) for a, b in zip(times, times[1:])]
    step = min(diffs)
    if step <= 0 or 3600 % step != 0:
        raise MalformedRow(f"{path}: inferred step {step}s does not divide one hour")
    if any(d % step != 0 for d in diffs):
        raise MalformedRow(f"{path}: timestamps are not on a regular {step}s grid")

    start = times[0]
    n = int((times[-1] - start).total_seconds()) // step + 1
    values = np.zeros(n, dtype=float)
    observed = np.zeros(n, dtype=bool)
    for ts, row in zip(times, rows):
        idx = int((ts - start).total_seconds()) // step
        values[idx] = row[0]
        observed[idx] = True
    return TemperatureSeries(start=start, step_seconds=step, values=values, observed=observed)


def write_weather_csv(series: TemperatureSeries, path: Path | str) -> None:
    lines = ["timestamp,temperature_c"]
    for i in np.flatnonzero(series.observed):
        lines.append(f"{format_timestamp(series.time_at(int(i)))},{format_float(series.values[i])}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


# --- alignment and gap filling ----------------------------------------------


def _interpolate_gaps(values: np.ndarray, observed: np.ndarray, max_gap: int) -> np.ndarray:
    """Linearly fill interior unobserved runs of length <= max_gap.

    Returns the per-row usability mask; `values` is filled in place
    (2-D arrays are filled column-wise).
    """
    usable = observed.copy()
    n = len(observed)
    i = 0
    while i < n:
        if observed[i]:
            i += 1
            continue
        j = i
        while j < n and not observed[j]:
            j += 1
        run = j - i
        has_left = i > 0
        has_right = j < n
        if run <= max_gap and has_left and has_right:
            left = values[i - 1]
            right = values[j]
            for k in range(run):
                frac = (k + 1) / (run + 1)
                values[i + k] = left + (right - left) * frac
            usable[i:j] = True
        i = j
    return usable


def align_and_fill(
    load: LoadTable,
    temp: TemperatureSeries | None,
    max_gap: int = DEFAULT_MAX_GAP_MINUTES,
) -> AlignedData:
    """Place load (and temperature, when given) on a common minute grid.

    Interior gaps of at most `max_gap` minutes are linearly interpolated;
    minutes inside longer gaps are marked unusable so the windows containing
    them drop out downstream.
    """
    if temp is None:
        grid_start = load.start
        n = load.n_rows
        lo = 0
    else:
        temp_end = temp.time_at(temp.n_rows - 1)
        load_end = load.time_at(load.n_rows - 1)
        grid_start = max(load.start, temp.start)
        if grid_start.second or grid_start.microsecond:
            grid_start = grid_start.replace(second=0, microsecond=0) + timedelta(minutes=1)
        grid_end = min(load_end, temp_end)
        n = int((grid_end - grid_start).total_seconds()) // MINUTE + 1
        if n < 60:
            raise NoOverlap("load and temperature series overlap by less than one hour")
        lo = int((grid_start - load.start).total_seconds()) // MINUTE

    values = load.values[lo : lo + n].copy()
    observed = load.observed[lo : lo + n].copy()
    aggregate = load.aggregate[lo : lo + n].copy()

    usable_load = _interpolate_gaps(values, observed, max_gap)
    if not load.aggregate_derived:
        _interpolate_gaps(aggregate, observed, max_gap)
    else:
        aggregate = values.sum(axis=1)

    if temp is not None:
        temp_minutes, usable_temp = _resample_temperature(temp, grid_start, n, max_gap)
        usable = usable_load & usable_temp
        out_temp = TemperatureSeries(
            start=grid_start, step_seconds=MINUTE, values=temp_minutes, observed=usable_temp
        )
    else:
        usable = usable_load
        out_temp = None

    if not _has_complete_window(grid_start, usable):
        raise AllGaps("no complete usable detection window remains after gap handling")

    out_load = LoadTable(
        consumer_id=load.consumer_id,
        start=grid_start,
        appliances=list(load.appliances),
        values=values,
        aggregate=aggregate,
        aggregate_derived=load.aggregate_derived,
        observed=usable_load,
    )
    return AlignedData(load=out_load, temp=out_temp, usable=usable)


def _resample_temperature(
    temp: TemperatureSeries, grid_start: datetime, n: int, max_gap: int
) -> tuple[np.ndarray, np.ndarray]:
    """Linear interpolation of observed temperature nodes onto the minute grid.

    A minute is unusable when its bracketing observed nodes are further apart
    than one nominal step plus the load gap allowance (i.e. a missing node).
    """
    obs_idx = np.flatnonzero(temp.observed)
    obs_seconds = obs_idx * temp.step_seconds
    obs_values = temp.values[obs_idx]
    offset = int((grid_start - temp.start).total_seconds())
    minute_seconds = offset + np.arange(n) * MINUTE

    values = np.interp(minute_seconds, obs_seconds, obs_values)
    usable = np.ones(n, dtype=bool)
    gap_limit = max(temp.step_seconds + max_gap * MINUTE, temp.step_seconds)

    usable &= minute_seconds >= obs_seconds[0]
    usable &= minute_seconds <= obs_seconds[-1]
    if len(obs_seconds) > 1:
        right = np.searchsorted(obs_seconds, minute_seconds, side="left")
        right = np.clip(right, 1, len(obs_seconds) - 1)
        span = obs_seconds[right] - obs_seconds[right - 1]
        on_node = np.isin(minute_seconds, obs_seconds)
        usable &= on_node | (span <= gap_limit)
    return values, usable


def _hour_aligned_starts(start: datetime, n: int) -> list[int]:
    """Indices of complete clock-hour windows inside an n-minute grid from `start`."""
    first = start
    if first.minute or first.second:
        first = first.replace(minute=0, second=0, microsecond=0) + timedelta(hours=1)
    base = int((first - start).total_seconds()) // MINUTE
    return [i for i in range(base, n - 59, 60)]


def _has_complete_window(start: datetime, usable: np.ndarray) -> bool:
    return any(usable[i : i + 60].all() for i in _hour_aligned_starts(start, len(usable)))


# --- activity bundling and labels -------------------------------------------


def bundle_activities(load: LoadTable, amap: ActivityMap) -> LoadTable:
    """Sum appliance columns into one column per activity.

    Unmapped appliance columns pass through unchanged, so total energy is
    conserved; the aggregate column is untouched.
    """
    missing = [a for apps in amap.entries.values() for a in apps if a not in load.appliances]
    if missing:
        raise UnknownAppliance(f"appliances not present in load data: {', '.join(sorted(missing))}")

    mapped = {a for apps in amap.entries.values() for a in apps}
    names: list[str] = []
    columns: list[np.ndarray] = []
    for activity, appliances in amap.entries.items():
        idx = [load.appliances.index(a) for a in appliances]
        names.append(activity)
        columns.append(load.values[:, idx].sum(axis=1))
    for i, name in enumerate(load.appliances):
        if name not in mapped:
            names.append(name)
            columns.append(load.values[:, i])

    return LoadTable(
        consumer_id=load.consumer_id,
        start=load.start,
        appliances=names,
        values=np.column_stack(columns),
        aggregate=load.aggregate.copy(),
        aggregate_derived=load.aggregate_derived,
        observed=load.observed.copy(),
    )


def window_labels(
    load: LoadTable,
    column: str,
    threshold: float = DEFAULT_LABEL_THRESHOLD_KW,
    usable: np.ndarray | None = None,
) -> LabelSeries:
    """Label each complete clock-hour window active when its mean power exceeds
    `threshold` (strictly). Windows containing unusable minutes are skipped;
    a trailing partial hour is dropped with a warning.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    series = load.column(column)
    starts_idx = _hour_aligned_starts(load.start, load.n_rows)
    if starts_idx and starts_idx[-1] + 60 < load.n_rows:
        warnings.warn(
            f"dropping trailing partial window after {load.time_at(starts_idx[-1] + 60)}",
            IncompleteWindowWarning,
            stacklevel=2,
        )
    starts: list[datetime] = []
    active: list[bool] = []
    for i in starts_idx:
        if usable is not None and not usable[i : i + 60].all():
            continue
        starts.append(load.time_at(i))
        active.append(bool(series[i : i + 60].mean() > threshold))
    return LabelSeries(activity=column, starts=starts, active=np.array(active, dtype=bool))


def build_windows(aligned: AlignedData, labels: LabelSeries | None = None) -> list[WindowRecord]:
    """Cut aligned data into complete, usable, hour-aligned detection windows."""
    load = aligned.load
    label_map = labels.as_dict() if labels is not None else {}
    windows: list[WindowRecord] = []
    for i in _hour_aligned_starts(load.start, load.n_rows):
        if not aligned.usable[i : i + 60].all():
            continue
        start = load.time_at(i)
        temp_mean = None
        if aligned.temp is not None:
            temp_mean = float(aligned.temp.values[i : i + 60].mean())
        windows.append(
            WindowRecord(
                start=start,
                samples=load.aggregate[i : i + 60].copy(),
                temp_mean=temp_mean,
                label=label_map.get(start),
            )
        )
    return windows


# --- label files -------------------------------------------------------------


def write_labels_csv(series_list: list[LabelSeries], path: Path | str) -> None:
    """Write per-activity window labels as `window_start,activity,label` rows."""
    lines = ["window_start,activity,label"]
    for series in series_list:
        for ts, is_active in zip(series.starts, series.active):
            lines.append(
                f"{format_timestamp(ts)},{series.activity},{ACTIVE if is_active else INACTIVE}"
            )
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def parse_labels_csv(path: Path | str) -> dict[str, LabelSeries]:
    """Read a combined label CSV back into one LabelSeries per activity."""
    path = str(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingHeader(f"{path}: empty file") from None
        if [c.strip() for c in header] != ["window_start", "activity", "label"]:
            raise MissingHeader(f"{path}: expected header 'window_start,activity,label'")
        starts: dict[str, list[datetime]] = {}
        active: dict[str, list[bool]] = {}
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != 3:
                raise MalformedRow(f"{path}: row {lineno}: expected 3 fields")
            ts = parse_timestamp(cells[0])
            activity = cells[1].strip()
            label = cells[2].strip().lower()
            if label not in (ACTIVE, INACTIVE):
                raise MalformedRow(f"{path}: row {lineno}: label must be active or inactive")
            starts.setdefault(activity, []).append(ts)
            active.setdefault(activity, []).append(label == ACTIVE)
    return {
        name: LabelSeries(activity=name, starts=starts[name], active=np.array(active[name], dtype=bool))
        for name in starts
    }
