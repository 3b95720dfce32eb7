"""Per-window feature extraction: time-domain statistics, DFT amplitude bins,
mean temperature, and the four ablation feature sets (M1-M4).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, MissingTemperature, WrongWindowLength
from .ingest import ACTIVE, INACTIVE, WindowRecord
from .util import atomic_write_text, format_float

WINDOW_LEN = 60
SPECTRUM_BINS = 10
DEGENERATE_STD = 1e-12

FREQ_COLUMNS = [f"f{k}" for k in range(SPECTRUM_BINS)]
TIME_COLUMNS = ["d_mean", "d_std", "var", "mean", "max"]
TIME_COLUMNS_MINIMAL = ["d_mean", "var"]
TEMP_COLUMN = "temp_c"

METHODS = ("M1", "M2", "M3", "M4")


def _check_window(window: np.ndarray) -> np.ndarray:
    x = np.asarray(window, dtype=float)
    if x.ndim != 1 or len(x) != WINDOW_LEN:
        raise WrongWindowLength(f"expected {WINDOW_LEN} samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise WrongWindowLength("window contains non-finite samples")
    return x


def time_domain_features(window: np.ndarray) -> np.ndarray:
    """[mean(diff), std(diff), var(x), mean(x), max(x)] over one 60-sample window.

    Diffs are the 59 first differences; std and var are population moments.
    """
    x = _check_window(window)
    d = np.diff(x)
    return np.array([d.mean(), d.std(), x.var(), x.mean(), x.max()])


def dft(x: np.ndarray) -> np.ndarray:
    """Full complex DFT via recursive mixed-radix decimation in time.

    Works for any length (prime lengths fall back to the direct combine step);
    no normalization is applied, so bin 0 equals n * mean(x).
    """
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if n == 0:
        raise WrongWindowLength("cannot transform an empty window")
    return _dft_recursive(x)


def _smallest_factor(n: int) -> int:
    for p in (2, 3, 5, 7):
        if n % p == 0:
            return p
    f = 11
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _dft_recursive(x: np.ndarray) -> np.ndarray:
    n = len(x)
    if n == 1:
        return x.copy()
    p = _smallest_factor(n)
    m = n // p
    subs = [_dft_recursive(x[s::p]) for s in range(p)]
    k = np.arange(n)
    out = np.zeros(n, dtype=complex)
    base = k % m
    for s, sub in enumerate(subs):
        out += np.exp(-2j * np.pi * k * s / n) * sub[base]
    return out


def amplitude_spectrum(window: np.ndarray, bins: int = SPECTRUM_BINS) -> np.ndarray:
    """Magnitudes of the first `bins` DFT coefficients of a 60-sample window."""
    x = _check_window(window)
    if not 1 <= bins <= WINDOW_LEN:
        raise WrongWindowLength(f"bins must be in [1, {WINDOW_LEN}]")
    return np.abs(dft(x))[:bins]


@dataclass
class Scaler:
    """Per-column standardization statistics fit on a training split."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(self.mean):
            raise DimensionMismatch(
                f"scaler has {len(self.mean)} columns, data has {rows.shape[1]}"
            )
        degenerate = self.std < DEGENERATE_STD
        safe = np.where(degenerate, 1.0, self.std)
        z = (rows - self.mean) / safe
        z[:, degenerate] = 0.0
        return z

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, raw: dict) -> "Scaler":
        return cls(mean=np.asarray(raw["mean"], dtype=float), std=np.asarray(raw["std"], dtype=float))


@dataclass
class FeatureMatrix:
    """Feature rows for one method, in chronological window order."""

    method: str
    columns: list[str]
    rows: np.ndarray
    starts: list[datetime]
    labels: np.ndarray | None = None
    scaler: Scaler | None = None

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    def subset(self, index: np.ndarray | list[int]) -> "FeatureMatrix":
        index = np.asarray(index, dtype=int)
        return FeatureMatrix(
            method=self.method,
            columns=list(self.columns),
            rows=self.rows[index],
            starts=[self.starts[i] for i in index],
            labels=None if self.labels is None else self.labels[index],
            scaler=self.scaler,
        )


def method_columns(method: str, time_features: str = "full") -> list[str]:
    """Column layout per method: frequency bins first, then time stats, then temperature."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    time_cols = TIME_COLUMNS if time_features == "full" else TIME_COLUMNS_MINIMAL
    if method == "M1":
        return list(FREQ_COLUMNS)
    if method == "M2":
        return list(time_cols)
    if method == "M3":
        return FREQ_COLUMNS + time_cols
    return FREQ_COLUMNS + time_cols + [TEMP_COLUMN]


def assemble(
    windows: list[WindowRecord],
    method: str,
    time_features: str = "full",
    detrend: bool = False,
) -> FeatureMatrix:
    """Build the feature matrix for `method` over chronologically ordered windows.

    `detrend` removes each window's mean before the DFT (bin 0 then carries no
    information). Temperature is required for M4 only.
    """
    if time_features not in ("full", "minimal"):
        raise ValueError("time_features must be 'full' or 'minimal'")
    columns = method_columns(method, time_features)
    if not windows:
        raise EmptyMatrix("no windows to assemble")
    if method == "M4" and any(w.temp_mean is None for w in windows):
        raise MissingTemperature("method M4 needs a temperature for every window")

    minimal = time_features == "minimal"
    rows = np.zeros((len(windows), len(columns)), dtype=float)
    prev = None
    for i, w in enumerate(windows):
        if prev is not None and w.start <= prev:
            raise ValueError("windows must be in strictly increasing time order")
        prev = w.start
        parts = []
        if method != "M2":
            x = w.samples - w.samples.mean() if detrend else w.samples
            parts.append(amplitude_spectrum(x))
        if method != "M1":
            t = time_domain_features(w.samples)
            parts.append(t[[0, 2]] if minimal else t)
        if method == "M4":
            parts.append(np.array([w.temp_mean], dtype=float))
        rows[i] = np.concatenate(parts)

    labels = None
    if all(w.label is not None for w in windows):
        labels = np.array([1 if w.label else -1 for w in windows], dtype=int)
    return FeatureMatrix(
        method=method, columns=columns, rows=rows, starts=[w.start for w in windows], labels=labels
    )


def standardize(matrix: FeatureMatrix, stats: Scaler | None = None) -> FeatureMatrix:
    """Z-score the matrix columns.

    Without `stats` the matrix is treated as the training split and its own
    population mean/std are fit; near-constant columns map to all-zeros.
    """
    if matrix.n_rows == 0:
        raise EmptyMatrix("cannot standardize an empty matrix")
    if stats is None:
        stats = Scaler(mean=matrix.rows.mean(axis=0), std=matrix.rows.std(axis=0))
    return replace(matrix, rows=stats.apply(matrix.rows), scaler=stats)


def save_matrix_csv(matrix: FeatureMatrix, path: Path | str) -> None:
    """Export feature rows with a `<columns...>,label` header."""
    lines = [",".join(matrix.columns) + ",label"]
    for i in range(matrix.n_rows):
        cells = [format_float(v) for v in matrix.rows[i]]
        if matrix.labels is None:
            cells.append("")
        else:
            cells.append(ACTIVE if matrix.labels[i] > 0 else INACTIVE)
        lines.append(",".join(cells))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")
