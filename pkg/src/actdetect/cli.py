"""Command-line pipeline: simulate | train | detect | evaluate | model | plot-data.

Every command is a pure function of its input files, flags, and seed; data
outputs are byte-identical across reruns (only manifest timestamps differ).
Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import evaluate as ev
from . import svm as svm_mod
from .activity_model import (
    ActivitySet,
    build_state_sequence,
    estimate_transition_matrix,
    hourly_distribution,
    stationary_distribution,
    write_profile_csv,
    write_transitions_json,
)
from .errors import ActdetectError, MissingTemperature, ZeroRow, ReducibleChain
from .features import assemble, standardize
from .ingest import (
    ActivityMap,
    LabelSeries,
    bundle_activities,
    build_windows,
    align_and_fill,
    default_activity_map,
    parse_labels_csv,
    parse_load_csv,
    parse_weather_csv,
    window_labels,
    write_labels_csv,
    write_load_csv,
    write_weather_csv,
    DEFAULT_LABEL_THRESHOLD_KW,
    DEFAULT_MAX_GAP_MINUTES,
)
from .manifest import write_manifest
from .synth import config_from_dict, config_to_dict, default_config, generate, load_config
from .util import atomic_write_text, format_float, format_timestamp


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for any randomized step")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")


def _load_inputs(args) -> tuple:
    load = parse_load_csv(args.load)
    temp = parse_weather_csv(args.weather) if args.weather else None
    return load, temp


def _ground_truth_windows(args, load, temp):
    """Align, bundle, and label windows for the target activity."""
    aligned = align_and_fill(load, temp, max_gap=args.max_gap)
    amap = ActivityMap.from_json(args.activity_map) if args.activity_map else default_activity_map()
    bundled = bundle_activities(aligned.load, amap)
    labels = window_labels(bundled, args.activity, threshold=args.threshold, usable=aligned.usable)
    aligned.load = bundled
    windows = build_windows(aligned, labels)
    return windows, labels


def _add_data_flags(parser, require_weather_hint=False):
    parser.add_argument("--load", type=Path, required=True, help="load CSV (timestamp,<appliance>...)")
    parser.add_argument("--weather", type=Path, default=None, help="weather CSV (timestamp,temperature_c)")
    parser.add_argument("--activity-map", type=Path, default=None, help="activity map JSON (default: built-in)")
    parser.add_argument("--activity", default="cooling-heating", help="target activity column")
    parser.add_argument("--threshold", type=float, default=DEFAULT_LABEL_THRESHOLD_KW,
                        help="ground-truth mean-power threshold in kW")
    parser.add_argument("--max-gap", type=int, default=DEFAULT_MAX_GAP_MINUTES,
                        help="longest gap in minutes to interpolate")


def cmd_simulate(args) -> int:
    if args.config is not None:
        if not args.config.exists():
            print(f"usage error: config file {args.config} does not exist", file=sys.stderr)
            return 2
        config = load_config(args.config)
    else:
        config = default_config()
    if args.seed is not None:
        config.seed = args.seed
    if args.days is not None:
        config.days = args.days
    config.validate()

    result = generate(config)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_load_csv(result.load, out / "load.csv")
    write_weather_csv(result.temperature, out / "weather.csv")
    write_labels_csv(list(result.labels.values()), out / "labels.csv")
    config_text = json.dumps(config_to_dict(config), indent=2) + "\n"
    atomic_write_text(out / "config.json", config_text)
    write_manifest(
        out, "simulate", config.seed, __version__, config_text=config_text,
        outputs={n: out / n for n in ("load.csv", "weather.csv", "labels.csv", "config.json")},
    )
    print(f"simulated {config.days} days -> {out} "
          f"(clip events: {result.clip_events}, noise floor events: {result.noise_floor_events})")
    return 0


def cmd_train(args) -> int:
    load, temp = _load_inputs(args)
    if args.method == "M4" and temp is None:
        raise MissingTemperature("method M4 requires --weather")
    windows, _ = _ground_truth_windows(args, load, temp)

    hp = svm_mod.TrainConfig(C=args.C, tol=args.tol, max_iter=args.max_iter,
                             seed=args.seed if args.seed is not None else 42,
                             balanced=args.balanced)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}

    methods = list(ev.METHODS) if args.method == "all" else [args.method]
    if args.tune_c and args.method != "all":
        best_c, scores = ev.tune_C(windows, args.method, hp=hp,
                                   time_features=args.time_features, detrend=args.detrend)
        hp.C = best_c
        print("validation accuracy by C: "
              + ", ".join(f"{c}: {scores[c]:.4f}" for c in sorted(scores)))
    result = ev.ablation_run(windows, hp, methods=methods,
                             time_features=args.time_features, detrend=args.detrend,
                             activity=args.activity)

    ev.save_metrics_csv(result.reports, out / "metrics.csv")
    outputs["metrics.csv"] = out / "metrics.csv"
    for method, model in result.models.items():
        name = "model.json" if len(result.models) == 1 else f"model_{method}.json"
        svm_mod.save(model, out / name)
        outputs[name] = out / name
    inputs = {"load.csv": args.load}
    if args.weather:
        inputs["weather.csv"] = args.weather
    write_manifest(out, "train", hp.seed, __version__, inputs=inputs, outputs=outputs)
    for method in sorted(result.reports):
        report = result.reports[method]
        cells = report.as_row()
        print(f"{method}: accuracy {cells[0]}  precision {cells[1]}  recall {cells[2]}")
    return 0


def cmd_detect(args) -> int:
    model = svm_mod.load(args.model)
    method, time_features, detrend = ev.infer_assembly(model)
    load = parse_load_csv(args.load)
    temp = parse_weather_csv(args.weather) if args.weather else None
    if method == "M4" and temp is None:
        raise MissingTemperature("model uses temperature; provide --weather")
    aligned = align_and_fill(load, temp, max_gap=args.max_gap)

    truth: LabelSeries | None = None
    if args.labels is not None:
        by_activity = parse_labels_csv(args.labels)
        if args.activity not in by_activity:
            raise ActdetectError(f"label file has no activity {args.activity!r}")
        truth = by_activity[args.activity]
    else:
        amap = ActivityMap.from_json(args.activity_map) if args.activity_map else default_activity_map()
        mapped = [a for apps in amap.entries.values() for a in apps]
        if any(a in aligned.load.appliances for a in mapped):
            bundled = bundle_activities(aligned.load, amap)
            truth = window_labels(bundled, args.activity, threshold=args.threshold,
                                  usable=aligned.usable)

    windows = build_windows(aligned, truth)
    matrix = assemble(windows, method, time_features=time_features, detrend=detrend)
    predicted = svm_mod.predict_batch(model, matrix.rows)
    pred_series = ev.labels_from_predictions(windows, predicted, args.activity)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    write_labels_csv([pred_series], out / "predictions.csv")
    outputs["predictions.csv"] = out / "predictions.csv"
    if truth is not None:
        truth_windows = LabelSeries(activity=args.activity, starts=[w.start for w in windows],
                                    active=np.array([bool(w.label) for w in windows]))
        ev.timeline_export(truth_windows, pred_series, windows, out / "timeline.csv")
        outputs["timeline.csv"] = out / "timeline.csv"
        report = ev.metrics(ev.confusion(truth_windows, pred_series))
        cells = report.as_row()
        print(f"accuracy {cells[0]}  precision {cells[1]}  recall {cells[2]}")
    else:
        print(f"wrote predictions for {len(windows)} windows (no ground truth available)")
    inputs = {"model.json": args.model, "load.csv": args.load}
    if args.weather:
        inputs["weather.csv"] = args.weather
    if args.labels:
        inputs["labels.csv"] = args.labels
    write_manifest(out, "detect", args.seed, __version__, inputs=inputs, outputs=outputs)
    return 0


def cmd_evaluate(args) -> int:
    if args.timeline is not None:
        with open(args.timeline, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            rows = list(reader)
        truth = np.array([r["truth"] == "active" for r in rows])
        pred = np.array([r["pred"] == "active" for r in rows])
        counts = ev.ConfusionCounts(
            tp=int(np.sum(truth & pred)), tn=int(np.sum(~truth & ~pred)),
            fp=int(np.sum(~truth & pred)), fn=int(np.sum(truth & ~pred)),
        )
        inputs = {"timeline.csv": args.timeline}
    else:
        if args.truth is None or args.pred is None:
            raise ActdetectError("provide either --timeline or both --truth and --pred")
        truth_series = parse_labels_csv(args.truth)
        pred_series = parse_labels_csv(args.pred)
        if args.activity not in truth_series or args.activity not in pred_series:
            raise ActdetectError(f"both label files must contain activity {args.activity!r}")
        counts = ev.confusion(truth_series[args.activity], pred_series[args.activity])
        inputs = {"truth.csv": args.truth, "pred.csv": args.pred}

    report = ev.metrics(counts)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    ev.save_metrics_csv({args.activity: report}, out / "metrics.csv")
    write_manifest(out, "evaluate", args.seed, __version__, inputs=inputs,
                   outputs={"metrics.csv": out / "metrics.csv"})
    cells = report.as_row()
    print(f"TP {counts.tp}  TN {counts.tn}  FP {counts.fp}  FN {counts.fn}")
    print(f"accuracy {cells[0]}  precision {cells[1]}  recall {cells[2]}")
    return 0


def cmd_model(args) -> int:
    by_activity = parse_labels_csv(args.labels)
    if args.states:
        names = [s.strip() for s in args.states.split(",") if s.strip()]
    else:
        names = list(by_activity)
    states = ActivitySet(tuple(names))

    profiles = [hourly_distribution(by_activity[name]) for name in names if name in by_activity]
    sequence = build_state_sequence(by_activity, states)
    matrix = estimate_transition_matrix(sequence, states, smoothing=args.smoothing)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(profiles, out / "profile.csv")
    write_transitions_json(matrix, out / "transitions.json")
    write_manifest(out, "model", args.seed, __version__, inputs={"labels.csv": args.labels},
                   outputs={"profile.csv": out / "profile.csv",
                            "transitions.json": out / "transitions.json"})
    print(f"states: {', '.join(states.names)}  onsets: {len(sequence)}")
    try:
        pi = stationary_distribution(matrix)
        print("stationary distribution: " + ", ".join(f"{p:.4f}" for p in pi))
    except (ZeroRow, ReducibleChain) as exc:
        print(f"stationary distribution unavailable: {exc}")
    return 0


def _sniff_header(path: Path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as handle:
        return [c.strip() for c in next(csv.reader(handle), [])]


def cmd_plot_data(args) -> int:
    header = _sniff_header(args.input)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    with open(args.input, newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))

    if header == ["method", "accuracy_pct", "precision_pct", "recall_pct"]:
        lines = ["method,metric,value"]
        for row in rows:
            for metric in ("accuracy_pct", "precision_pct", "recall_pct"):
                lines.append(f"{row['method']},{metric[:-4]},{row[metric]}")
        target = out / "metrics_tidy.csv"
    elif header == ["hour", "load_kwh", "truth", "pred", "flag"]:
        lines = ["hour,series,value"]
        for row in rows:
            lines.append(f"{row['hour']},load_kwh,{row['load_kwh']}")
            lines.append(f"{row['hour']},truth,{1 if row['truth'] == 'active' else 0}")
            lines.append(f"{row['hour']},pred,{1 if row['pred'] == 'active' else 0}")
        target = out / "timeline_steps.csv"
    elif header == ["activity", "hour", "frequency"]:
        lines = ["activity,hour,frequency"]
        for row in rows:
            lines.append(f"{row['activity']},{row['hour']},{row['frequency']}")
        target = out / "profile_tidy.csv"
    else:
        print(f"error: unrecognized input kind with header {','.join(header)!r}", file=sys.stderr)
        return 2

    atomic_write_text(target, "\n".join(lines) + "\n")
    write_manifest(out, "plot-data", args.seed, __version__,
                   inputs={args.input.name: args.input}, outputs={target.name: target})
    print(f"wrote {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actdetect",
        description="Detect and model household activities from minute-level smart-meter data.",
    )
    parser.add_argument("--version", action="version", version=f"actdetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled synthetic household")
    _common_flags(p)
    p.add_argument("--days", type=int, default=None, help="override days from config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train detection models and report metrics")
    _common_flags(p)
    _add_data_flags(p)
    p.add_argument("--method", default="M4", choices=["M1", "M2", "M3", "M4", "all"])
    p.add_argument("--C", type=float, default=1.0, help="soft-margin penalty")
    p.add_argument("--tol", type=float, default=1e-4, help="solver KKT tolerance")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--balanced", action="store_true", help="per-class penalties by inverse frequency")
    p.add_argument("--time-features", default="full", choices=["full", "minimal"])
    p.add_argument("--detrend", action="store_true", help="remove window mean before the DFT")
    p.add_argument("--tune-c", action="store_true", help="pick C on the validation split")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a trained model over load data")
    _common_flags(p)
    p.add_argument("--model", type=Path, required=True)
    _add_data_flags(p)
    p.add_argument("--labels", type=Path, default=None, help="ground-truth labels CSV for the timeline")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    _common_flags(p)
    p.add_argument("--timeline", type=Path, default=None, help="timeline.csv from detect")
    p.add_argument("--truth", type=Path, default=None, help="ground-truth labels CSV")
    p.add_argument("--pred", type=Path, default=None, help="predicted labels CSV")
    p.add_argument("--activity", default="cooling-heating")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("model", help="build hourly profiles and a transition matrix from labels")
    _common_flags(p)
    p.add_argument("--labels", type=Path, required=True, help="combined labels CSV")
    p.add_argument("--states", default=None, help="comma-separated activity order for the matrix")
    p.add_argument("--smoothing", type=float, default=0.0, help="Laplace smoothing for transition rows")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("plot-data", help="reshape outputs into tidy CSVs for plotting")
    _common_flags(p)
    p.add_argument("--input", type=Path, required=True)
    p.set_defaults(func=cmd_plot_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ActdetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
