"""Chronological splitting, confusion counts, detection metrics, the M1-M4
ablation harness, and timeline export."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import svm as svm_mod
from .errors import (
    EmptyCounts,
    SkippedMethodWarning,
    TimestampMismatch,
    TooFewWindows,
)
from .features import (
    FeatureMatrix,
    METHODS,
    assemble,
    method_columns,
    standardize,
)
from .ingest import ACTIVE, INACTIVE, LabelSeries, WindowRecord
from .svm import SvmModel, TrainConfig
from .util import atomic_write_text, format_float

DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)


@dataclass(frozen=True)
class ConfusionCounts:
    """True/false positive/negative tallies over evaluated windows."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class MetricsReport:
    """Accuracy/precision/recall as percentages; None marks an undefined ratio
    (zero denominator) rather than coercing it to 0 or 100."""

    accuracy: float
    precision: float | None
    recall: float | None

    def as_row(self) -> list[str]:
        def cell(v):
            return "NA" if v is None else format_float(v)

        return [cell(self.accuracy), cell(self.precision), cell(self.recall)]


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split(n_windows: int, fractions=DEFAULT_FRACTIONS) -> SplitIndices:
    """Contiguous chronological split; floor allocation with the remainder
    going to the test set."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    if n_windows < 10:
        raise TooFewWindows(f"need at least 10 windows to split, got {n_windows}")
    n_train = int(np.floor(n_windows * fractions[0]))
    n_val = int(np.floor(n_windows * fractions[1]))
    idx = np.arange(n_windows)
    return SplitIndices(
        train=idx[:n_train],
        val=idx[n_train : n_train + n_val],
        test=idx[n_train + n_val :],
    )


def confusion(truth: LabelSeries, pred: LabelSeries) -> ConfusionCounts:
    """Tally agreement between two label series on identical window grids."""
    if truth.starts != pred.starts:
        raise TimestampMismatch("truth and prediction series cover different windows")
    t = truth.active
    p = pred.active
    return ConfusionCounts(
        tp=int(np.sum(t & p)),
        tn=int(np.sum(~t & ~p)),
        fp=int(np.sum(~t & p)),
        fn=int(np.sum(t & ~p)),
    )


def metrics(c: ConfusionCounts) -> MetricsReport:
    """Accuracy, precision, and recall as percentages of the tallies."""
    if c.total == 0:
        raise EmptyCounts("no evaluated windows")
    # Each percentage is an exact integer product followed by one division, so
    # the result is the correctly rounded value of the underlying rational.
    accuracy = 100.0 * (c.tp + c.tn) / c.total
    precision = None if c.tp + c.fp == 0 else 100.0 * c.tp / (c.tp + c.fp)
    recall = None if c.tp + c.fn == 0 else 100.0 * c.tp / (c.tp + c.fn)
    return MetricsReport(accuracy=accuracy, precision=precision, recall=recall)


def labels_from_predictions(windows: list[WindowRecord], active: np.ndarray, activity: str) -> LabelSeries:
    return LabelSeries(activity=activity, starts=[w.start for w in windows], active=active)


@dataclass
class AblationResult:
    reports: dict[str, MetricsReport]
    models: dict[str, SvmModel]
    split: SplitIndices
    truth_test: LabelSeries
    predictions_test: dict[str, LabelSeries]


def _fit_and_score(
    matrix: FeatureMatrix, parts: SplitIndices, hp: TrainConfig
) -> tuple[SvmModel, np.ndarray]:
    train_split = standardize(matrix.subset(parts.train))
    model = svm_mod.train(train_split, hp)
    test_rows = matrix.subset(parts.test)
    return model, svm_mod.predict_batch(model, test_rows.rows)


def ablation_run(
    windows: list[WindowRecord],
    hp: TrainConfig | None = None,
    fractions=DEFAULT_FRACTIONS,
    methods=METHODS,
    time_features: str = "full",
    detrend: bool = False,
    activity: str = "activity",
) -> AblationResult:
    """Train one model per feature method on an identical chronological split
    and report test-split metrics for each."""
    hp = hp or TrainConfig()
    if any(w.label is None for w in windows):
        raise ValueError("ablation needs ground-truth labels on every window")
    parts = split(len(windows), fractions)
    test_windows = [windows[i] for i in parts.test]
    truth_test = LabelSeries(
        activity=activity,
        starts=[w.start for w in test_windows],
        active=np.array([bool(w.label) for w in test_windows]),
    )

    has_temp = all(w.temp_mean is not None for w in windows)
    reports: dict[str, MetricsReport] = {}
    models: dict[str, SvmModel] = {}
    predictions: dict[str, LabelSeries] = {}
    for method in methods:
        if method == "M4" and not has_temp:
            warnings.warn("skipping M4: no temperature data", SkippedMethodWarning, stacklevel=2)
            continue
        matrix = assemble(windows, method, time_features=time_features, detrend=detrend)
        model, predicted = _fit_and_score(matrix, parts, hp)
        model.train_meta.update(
            {"method": method, "time_features": time_features, "detrend": detrend}
        )
        pred_series = labels_from_predictions(test_windows, predicted, activity)
        reports[method] = metrics(confusion(truth_test, pred_series))
        models[method] = model
        predictions[method] = pred_series
    return AblationResult(
        reports=reports,
        models=models,
        split=parts,
        truth_test=truth_test,
        predictions_test=predictions,
    )


def tune_C(
    windows: list[WindowRecord],
    method: str,
    grid=(0.1, 1.0, 10.0, 100.0),
    hp: TrainConfig | None = None,
    fractions=DEFAULT_FRACTIONS,
    time_features: str = "full",
    detrend: bool = False,
) -> tuple[float, dict[float, float]]:
    """Pick C by validation-split accuracy (ties go to the smaller C)."""
    base = hp or TrainConfig()
    if any(w.label is None for w in windows):
        raise ValueError("tuning needs ground-truth labels on every window")
    parts = split(len(windows), fractions)
    matrix = assemble(windows, method, time_features=time_features, detrend=detrend)
    val_rows = matrix.subset(parts.val)
    truth_val = np.array([bool(windows[i].label) for i in parts.val])
    scores: dict[float, float] = {}
    for c_value in grid:
        hp_c = TrainConfig(C=c_value, tol=base.tol, max_iter=base.max_iter,
                           seed=base.seed, balanced=base.balanced)
        train_split = standardize(matrix.subset(parts.train))
        model = svm_mod.train(train_split, hp_c)
        predicted = svm_mod.predict_batch(model, val_rows.rows)
        scores[c_value] = float(np.mean(predicted == truth_val))
    best = max(sorted(scores), key=lambda c: scores[c])
    return best, scores


def timeline_export(
    truth: LabelSeries,
    pred: LabelSeries,
    windows: list[WindowRecord],
    path: Path | str | None = None,
) -> list[tuple]:
    """One row per window: (hour index, energy kWh, truth, pred, FP/FN flag)."""
    if truth.starts != pred.starts:
        raise TimestampMismatch("truth and prediction series cover different windows")
    if [w.start for w in windows] != truth.starts:
        raise TimestampMismatch("windows do not match the label series")
    rows = []
    for hour, (w, t, p) in enumerate(zip(windows, truth.active, pred.active)):
        flag = ""
        if p and not t:
            flag = "FP"
        elif t and not p:
            flag = "FN"
        kwh = float(w.samples.mean())  # mean kW over one hour == kWh
        rows.append((hour, kwh, bool(t), bool(p), flag))
    if path is not None:
        lines = ["hour,load_kwh,truth,pred,flag"]
        for hour, kwh, t, p, flag in rows:
            lines.append(
                f"{hour},{format_float(kwh)},{ACTIVE if t else INACTIVE},"
                f"{ACTIVE if p else INACTIVE},{flag}"
            )
        atomic_write_text(Path(path), "\n".join(lines) + "\n")
    return rows


def save_metrics_csv(reports: dict[str, MetricsReport], path: Path | str) -> None:
    lines = ["method,accuracy_pct,precision_pct,recall_pct"]
    for method in sorted(reports):
        lines.append(",".join([method] + reports[method].as_row()))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def infer_assembly(model: SvmModel) -> tuple[str, str, bool]:
    """Recover (method, time_features, detrend) from a model's column layout."""
    for method in METHODS:
        for tf in ("full", "minimal"):
            if list(model.columns) == method_columns(method, tf):
                detrend = bool(model.train_meta.get("detrend", False))
                return method, tf, detrend
    from .errors import DimensionMismatch

    raise DimensionMismatch(f"unrecognized model column layout: {model.columns}")
