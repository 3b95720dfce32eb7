"""Seeded synthetic household generator.

Planted per-hour activity activations (optionally driven by a Markov chain
over onsets) switch appliance power signatures on top of a constant base load
with Gaussian meter noise; a diurnal temperature series modulates the
temperature-coupled activity. Ground-truth labels come from the planted
activations themselves, never from re-thresholding the generated load, so the
labeler and the whole detection pipeline can be checked against them.

Randomness uses numpy's seeded PCG64 generator with a fixed draw order
(documented in `generate`), so a given (config, seed) reproduces bit-identical
corpora across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, InvalidPeriod
from .ingest import LabelSeries, LoadTable, TemperatureSeries
from .util import parse_timestamp

SHAPES = ("constant", "on-off-cycle", "ramp")

DEFAULT_START = datetime(2021, 6, 1, tzinfo=timezone.utc)


@dataclass
class ApplianceSignature:
    """Within-hour power pattern an appliance plays while its activity runs."""

    shape: str
    power_kw: float
    duty_cycle: float = 1.0
    period_minutes: int = 10
    duration_minutes: int = 60

    def validate(self) -> None:
        if self.shape not in SHAPES:
            raise InvalidConfig(f"unknown signature shape {self.shape!r}")
        if self.power_kw < 0:
            raise InvalidConfig("signature power must be non-negative")
        if not 0 < self.duty_cycle <= 1:
            raise InvalidConfig("duty cycle must lie in (0, 1]")
        if self.duration_minutes < 1:
            raise InvalidConfig("duration must be at least one minute")
        if self.shape == "on-off-cycle" and self.period_minutes < 2:
            raise InvalidPeriod("cycle period must be at least 2 minutes")


@dataclass
class Appliance:
    name: str
    signature: ApplianceSignature


@dataclass
class ActivitySpec:
    """One household activity: its appliances and per-hour onset probabilities."""

    name: str
    appliances: list[Appliance]
    hourly_activation: np.ndarray

    def __post_init__(self):
        self.hourly_activation = np.asarray(self.hourly_activation, dtype=float)

    def validate(self) -> None:
        if not self.appliances:
            raise InvalidConfig(f"activity {self.name!r} has no appliances")
        if self.hourly_activation.shape != (24,):
            raise InvalidConfig(f"activity {self.name!r} needs 24 hourly probabilities")
        if np.any(self.hourly_activation < 0) or np.any(self.hourly_activation > 1):
            raise InvalidConfig(f"activity {self.name!r} probabilities must lie in [0, 1]")
        for appliance in self.appliances:
            appliance.signature.validate()


@dataclass
class TempCoupling:
    """Activation boost for one activity on hot hours: p += prob_per_c * max(0, T - threshold)."""

    activity: str
    threshold_c: float
    prob_per_c: float


@dataclass
class TemperatureModel:
    base_c: float = 24.0
    amplitude_c: float = 6.0
    peak_hour: float = 15.0
    day_jitter_c: float = 2.0
    minute_noise_c: float = 0.3


@dataclass
class PlantedTransitions:
    """Markov chain over onset states; steps land on every other hour so each
    onset is isolated and recoverable from window labels."""

    states: list[str]
    P: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)

    def validate(self, activity_names: list[str]) -> None:
        k = len(self.states)
        if self.P.shape != (k, k):
            raise InvalidConfig("planted transition matrix must be square over its states")
        if np.any(self.P < 0) or np.any(np.abs(self.P.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidConfig("planted transition matrix rows must sum to 1")
        missing = [s for s in self.states if s not in activity_names]
        if missing:
            raise InvalidConfig(f"planted states are not configured activities: {missing}")


@dataclass
class SynthConfig:
    seed: int = 42
    days: int = 60
    start: datetime = DEFAULT_START
    base_load_kw: float = 0.3
    noise_std_kw: float = 0.05
    activities: list[ActivitySpec] = field(default_factory=list)
    temp_coupling: TempCoupling | None = None
    planted_transitions: PlantedTransitions | None = None
    temperature: TemperatureModel = field(default_factory=TemperatureModel)

    def validate(self) -> None:
        if self.days < 1:
            raise InvalidConfig("need at least one day")
        if self.base_load_kw < 0 or self.noise_std_kw < 0:
            raise InvalidConfig("base load and noise std must be non-negative")
        if not self.activities:
            raise InvalidConfig("need at least one activity")
        names = [a.name for a in self.activities]
        if len(set(names)) != len(names):
            raise InvalidConfig("activity names must be unique")
        seen: set[str] = set()
        for activity in self.activities:
            activity.validate()
            for appliance in activity.appliances:
                if appliance.name in seen:
                    raise InvalidConfig(f"appliance name {appliance.name!r} reused")
                seen.add(appliance.name)
        if self.temp_coupling is not None and self.temp_coupling.activity not in names:
            raise InvalidConfig(
                f"temperature-coupled activity {self.temp_coupling.activity!r} is not configured"
            )
        if self.planted_transitions is not None:
            self.planted_transitions.validate(names)


@dataclass
class SynthResult:
    load: LoadTable
    temperature: TemperatureSeries
    labels: dict[str, LabelSeries]
    activations: np.ndarray  # (days*24, n_activities) planted ground truth
    clip_events: int
    noise_floor_events: int
    config: SynthConfig


def signature_trace(signature: ApplianceSignature, phase: int = 0) -> np.ndarray:
    """Render one 60-minute trace for an activation starting at minute 0."""
    trace = np.zeros(60)
    run = min(signature.duration_minutes, 60)
    if signature.shape == "constant":
        trace[:run] = signature.power_kw
    elif signature.shape == "ramp":
        trace[:run] = signature.power_kw * (np.arange(1, run + 1) / run)
    else:
        period = signature.period_minutes
        on_minutes = max(1, round(signature.duty_cycle * period))
        minutes = np.arange(run)
        trace[:run] = np.where((minutes + phase) % period < on_minutes, signature.power_kw, 0.0)
    return trace


def cycling_pair(
    power_a: float, power_b: float, period: int, duty: float, minutes: int = 60
) -> tuple[np.ndarray, np.ndarray]:
    """Two on-off traces sharing the exact same on-minutes (coincident cycling)."""
    if period < 2:
        raise InvalidPeriod("cycle period must be at least 2 minutes")
    if not 0 < duty <= 1:
        raise InvalidConfig("duty cycle must lie in (0, 1]")
    on_minutes = max(1, round(duty * period))
    support = (np.arange(minutes) % period) < on_minutes
    return power_a * support.astype(float), power_b * support.astype(float)


def simulate_state_sequence(
    P: np.ndarray, steps: int, seed: int, start_state: int | None = None
) -> np.ndarray:
    """Walk a row-stochastic chain for `steps` states (seeded, reproducible)."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidConfig("transition matrix rows must sum to 1")
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(P, axis=1)
    seq = np.empty(steps, dtype=int)
    state = int(rng.integers(len(P))) if start_state is None else start_state
    for i in range(steps):
        seq[i] = state
        state = int(np.searchsorted(cumulative[state], rng.random(), side="right"))
        state = min(state, len(P) - 1)
    return seq


def _temperature_minutes(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    tm = config.temperature
    n = config.days * 1440
    day_offsets = rng.normal(0.0, tm.day_jitter_c, config.days)
    noise = rng.normal(0.0, tm.minute_noise_c, n)
    minute_of_day = np.arange(n) % 1440
    day_index = np.arange(n) // 1440
    hour_frac = minute_of_day / 60.0
    diurnal = tm.amplitude_c * np.cos(2.0 * np.pi * (hour_frac - tm.peak_hour) / 24.0)
    return tm.base_c + diurnal + day_offsets[day_index] + noise


def _draw_activations(
    config: SynthConfig, hourly_temp: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Planted per-(hour, activity) activations; see module docstring for modes."""
    n_hours = config.days * 24
    names = [a.name for a in config.activities]
    active = np.zeros((n_hours, len(names)), dtype=bool)

    chain_members: set[int] = set()
    if config.planted_transitions is not None:
        planted = config.planted_transitions
        chain_members = {names.index(s) for s in planted.states}
        steps = n_hours // 2
        seq = simulate_state_sequence(planted.P, steps, seed=int(rng.integers(2**32)))
        for step, state in enumerate(seq):
            active[2 * step, names.index(planted.states[state])] = True

    uniforms = rng.random((n_hours, len(names)))
    prob = np.stack([a.hourly_activation for a in config.activities], axis=1)  # (24, n_act)
    prob_hours = prob[np.arange(n_hours) % 24]  # (n_hours, n_act)
    if config.temp_coupling is not None:
        coupling = config.temp_coupling
        idx = names.index(coupling.activity)
        boost = coupling.prob_per_c * np.maximum(0.0, hourly_temp - coupling.threshold_c)
        prob_hours[:, idx] = np.clip(prob_hours[:, idx] + boost, 0.0, 1.0)
    bernoulli = uniforms < prob_hours
    for col in range(len(names)):
        if col not in chain_members:
            active[:, col] = bernoulli[:, col]
    return active


def generate(config: SynthConfig) -> SynthResult:
    """Produce one labeled synthetic household.

    Draw order (fixed for reproducibility): temperature day offsets, minute
    temperature noise, chain seed (when planted transitions are set), the
    hour-by-activity activation uniforms, per-activation cycling phases, and
    finally the aggregate meter noise.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n_minutes = config.days * 1440
    n_hours = config.days * 24

    temp_minutes = _temperature_minutes(config, rng)
    hourly_temp = temp_minutes.reshape(n_hours, 60).mean(axis=1)
    activations = _draw_activations(config, hourly_temp, rng)

    appliance_names = [app.name for act in config.activities for app in act.appliances]
    appliance_of = {
        name: (ai, app)
        for ai, act in enumerate(config.activities)
        for app in act.appliances
        for name in [app.name]
    }
    values = np.zeros((n_minutes, len(appliance_names)), dtype=float)
    for hour in range(n_hours):
        lo = hour * 60
        for ai, activity in enumerate(config.activities):
            if not activations[hour, ai]:
                continue
            for appliance in activity.appliances:
                sig = appliance.signature
                phase = int(rng.integers(sig.period_minutes)) if sig.shape == "on-off-cycle" else 0
                col = appliance_names.index(appliance.name)
                values[lo : lo + 60, col] += signature_trace(sig, phase)

    noise = rng.normal(0.0, config.noise_std_kw, n_minutes) if config.noise_std_kw > 0 else np.zeros(n_minutes)
    pre_clip = config.base_load_kw + values.sum(axis=1) + noise
    clip_events = int(np.sum(pre_clip < 0))
    noise_floor_events = int(np.sum(noise < -3.0 * config.noise_std_kw)) if config.noise_std_kw > 0 else 0
    aggregate = np.maximum(pre_clip, 0.0)

    load = LoadTable(
        consumer_id=f"synth-{config.seed}",
        start=config.start,
        appliances=appliance_names,
        values=values,
        aggregate=aggregate,
        aggregate_derived=False,
    )
    temperature = TemperatureSeries(start=config.start, step_seconds=60, values=temp_minutes)

    hour_starts = [load.time_at(h * 60) for h in range(n_hours)]
    labels = {
        activity.name: LabelSeries(
            activity=activity.name, starts=hour_starts, active=activations[:, ai].copy()
        )
        for ai, activity in enumerate(config.activities)
    }
    return SynthResult(
        load=load,
        temperature=temperature,
        labels=labels,
        activations=activations,
        clip_events=clip_events,
        noise_floor_events=noise_floor_events,
        config=config,
    )


# --- shipped default household ----------------------------------------------


def _probs(entries: dict[int, float]) -> np.ndarray:
    out = np.zeros(24)
    for hour, p in entries.items():
        out[hour] = p
    return out


def default_config(seed: int = 42, days: int = 60, temp_coupling: bool = True) -> SynthConfig:
    """The standard six-activity household used by the test corpus and docs.

    The laundry and food-preparing signatures are tuned to shadow the cooling
    signature in exactly one feature domain each (identical exported spectrum
    bins for laundry, near-identical time statistics for food-preparing), so
    single-domain detectors face real confusion while the combined feature set
    does not.
    """
    activities = [
        ActivitySpec(
            name="sleeping",
            appliances=[Appliance("bedroom_light", ApplianceSignature("constant", 0.08))],
            hourly_activation=_probs({0: 0.95, 1: 0.95, 2: 0.95, 3: 0.95, 4: 0.95, 5: 0.95,
                                      6: 0.9, 7: 0.1, 22: 0.1, 23: 0.9}),
        ),
        ActivitySpec(
            name="grooming",
            appliances=[Appliance("hair_dryer", ApplianceSignature("constant", 1.3, duration_minutes=15))],
            hourly_activation=_probs({6: 0.1, 7: 0.9, 8: 0.15, 21: 0.05, 22: 0.15}),
        ),
        ActivitySpec(
            name="food-preparing",
            appliances=[
                Appliance("oven", ApplianceSignature("on-off-cycle", 1.5, duty_cycle=0.5, period_minutes=12)),
                Appliance("microwave", ApplianceSignature("constant", 0.4)),
            ],
            hourly_activation=_probs({6: 0.05, 7: 0.9, 8: 0.1, 11: 0.05, 12: 0.15,
                                      17: 0.1, 18: 0.9, 19: 0.15}),
        ),
        ActivitySpec(
            name="dish-washing",
            appliances=[
                Appliance("dishwasher", ApplianceSignature("on-off-cycle", 1.2, duty_cycle=0.4, period_minutes=15))
            ],
            hourly_activation=_probs({8: 0.12, 13: 0.1, 19: 0.15, 20: 0.9}),
        ),
        ActivitySpec(
            name="laundry",
            appliances=[
                Appliance("washer", ApplianceSignature("on-off-cycle", 1.854, duty_cycle=0.3, period_minutes=10)),
                Appliance("dryer", ApplianceSignature("constant", 0.594)),
            ],
            hourly_activation=_probs({9: 0.1, 10: 0.15, 11: 0.1, 14: 0.1, 15: 0.1, 20: 0.12, 21: 0.1}),
        ),
        ActivitySpec(
            name="cooling-heating",
            appliances=[
                Appliance("compressor", ApplianceSignature("on-off-cycle", 1.5, duty_cycle=0.5, period_minutes=10)),
                Appliance("furnace", ApplianceSignature("constant", 0.4)),
            ],
            hourly_activation=_probs({0: 0.05, 1: 0.05, 2: 0.05, 3: 0.05, 4: 0.05, 5: 0.05,
                                      6: 0.05, 7: 0.05, 8: 0.12, 9: 0.12, 10: 0.12,
                                      11: 0.2, 12: 0.2, 13: 0.2, 14: 0.25, 15: 0.25,
                                      16: 0.25, 17: 0.25, 18: 0.25, 19: 0.15, 20: 0.15,
                                      21: 0.15, 22: 0.08, 23: 0.08}),
        ),
    ]
    return SynthConfig(
        seed=seed,
        days=days,
        activities=activities,
        temp_coupling=TempCoupling(activity="cooling-heating", threshold_c=26.0, prob_per_c=0.06)
        if temp_coupling
        else None,
    )


# --- JSON config round-trip ---------------------------------------------------


def config_to_dict(config: SynthConfig) -> dict:
    doc = {
        "seed": config.seed,
        "days": config.days,
        "start": config.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "base_load_kw": config.base_load_kw,
        "noise_std_kw": config.noise_std_kw,
        "temperature": {
            "base_c": config.temperature.base_c,
            "amplitude_c": config.temperature.amplitude_c,
            "peak_hour": config.temperature.peak_hour,
            "day_jitter_c": config.temperature.day_jitter_c,
            "minute_noise_c": config.temperature.minute_noise_c,
        },
        "activities": [
            {
                "name": act.name,
                "hourly_activation": [float(p) for p in act.hourly_activation],
                "appliances": [
                    {
                        "name": app.name,
                        "shape": app.signature.shape,
                        "power_kw": app.signature.power_kw,
                        "duty_cycle": app.signature.duty_cycle,
                        "period_minutes": app.signature.period_minutes,
                        "duration_minutes": app.signature.duration_minutes,
                    }
                    for app in act.appliances
                ],
            }
            for act in config.activities
        ],
        "temp_coupling": None
        if config.temp_coupling is None
        else {
            "activity": config.temp_coupling.activity,
            "threshold_c": config.temp_coupling.threshold_c,
            "prob_per_c": config.temp_coupling.prob_per_c,
        },
        "planted_transitions": None
        if config.planted_transitions is None
        else {
            "states": list(config.planted_transitions.states),
            "P": [[float(v) for v in row] for row in config.planted_transitions.P],
        },
    }
    return doc


def config_from_dict(doc: dict) -> SynthConfig:
    try:
        temperature = TemperatureModel(**doc.get("temperature", {}))
        activities = [
            ActivitySpec(
                name=act["name"],
                hourly_activation=np.asarray(act["hourly_activation"], dtype=float),
                appliances=[
                    Appliance(
                        name=app["name"],
                        signature=ApplianceSignature(
                            shape=app["shape"],
                            power_kw=float(app["power_kw"]),
                            duty_cycle=float(app.get("duty_cycle", 1.0)),
                            period_minutes=int(app.get("period_minutes", 10)),
                            duration_minutes=int(app.get("duration_minutes", 60)),
                        ),
                    )
                    for app in act["appliances"]
                ],
            )
            for act in doc["activities"]
        ]
        coupling = doc.get("temp_coupling")
        planted = doc.get("planted_transitions")
        config = SynthConfig(
            seed=int(doc.get("seed", 42)),
            days=int(doc.get("days", 60)),
            start=parse_timestamp(doc.get("start", "2021-06-01T00:00:00Z")),
            base_load_kw=float(doc.get("base_load_kw", 0.3)),
            noise_std_kw=float(doc.get("noise_std_kw", 0.05)),
            activities=activities,
            temp_coupling=None if coupling is None else TempCoupling(**coupling),
            planted_transitions=None
            if planted is None
            else PlantedTransitions(states=list(planted["states"]), P=np.asarray(planted["P"])),
            temperature=temperature,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"bad generator config: {exc}") from exc
    config.validate()
    return config


def load_config(path: Path | str) -> SynthConfig:
    with open(path, encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))
