"""Behavioral models over detected activity windows: 24-hour occurrence
profiles and a Markov transition matrix over activity onsets.

States are emitted at activity onsets (inactive -> active edges), not per
occupied hour, so a three-hour activity contributes one state and repeated
distinct onsets of the same activity yield self-transitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import numpy as np

from .errors import (
    GridMismatch,
    NoCompleteDays,
    ReducibleChain,
    SequenceTooShort,
    ZeroRow,
)
from .ingest import LabelSeries
from .util import atomic_write_text, format_float

STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class ActivitySet:
    """Ordered activity names; the order fixes matrix state indices."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("activity set must not be empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("activity names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass
class HourlyProfile:
    """Fraction of observed days on which the activity was active, per hour."""

    activity: str
    frequency: np.ndarray
    days_observed: np.ndarray

    def __post_init__(self):
        self.frequency = np.asarray(self.frequency, dtype=float)
        if self.frequency.shape != (24,):
            raise ValueError("frequency must have 24 entries")
        if np.any(self.frequency < 0) or np.any(self.frequency > 1):
            raise ValueError("frequencies must lie in [0, 1]")


@dataclass
class TransitionMatrix:
    """Row-stochastic onset-transition probabilities plus the raw tallies.

    With zero smoothing, rows that were never observed stay all-zero and are
    flagged False in `row_observed` instead of being normalized.
    """

    states: ActivitySet
    P: np.ndarray
    counts: np.ndarray
    smoothing: float
    row_observed: np.ndarray


def hourly_distribution(labels: LabelSeries, span_days: int | None = None) -> HourlyProfile:
    """24-bin occurrence profile: frequency[h] = active days / observed days at hour h.

    `span_days` restricts the tally to the first N calendar days when given.
    Requires at least one complete (24-window) day.
    """
    starts = labels.starts
    active = labels.active
    if span_days is not None:
        cutoff = starts[0].replace(hour=0, minute=0, second=0, microsecond=0) + timedelta(days=span_days)
        keep = [i for i, ts in enumerate(starts) if ts < cutoff]
        starts = [starts[i] for i in keep]
        active = active[keep]

    hours_per_day: dict = {}
    for ts, is_active in zip(starts, active):
        day = ts.date()
        hours_per_day.setdefault(day, {})[ts.hour] = bool(is_active)
    if not any(len(hours) == 24 for hours in hours_per_day.values()):
        raise NoCompleteDays("no complete 24-window day in the label series")

    observed = np.zeros(24, dtype=int)
    active_days = np.zeros(24, dtype=int)
    for hours in hours_per_day.values():
        for hour, is_active in hours.items():
            observed[hour] += 1
            active_days[hour] += int(is_active)
    frequency = np.zeros(24, dtype=float)
    nonzero = observed > 0
    frequency[nonzero] = active_days[nonzero] / observed[nonzero]
    return HourlyProfile(activity=labels.activity, frequency=frequency, days_observed=observed)


def build_state_sequence(
    labels: dict[str, LabelSeries] | list[LabelSeries], states: ActivitySet
) -> list[int]:
    """Onset-ordered state indices over a common window grid.

    The window before the series start counts as inactive, so an initially
    active window is an onset. Simultaneous onsets are emitted in state-index
    order.
    """
    if isinstance(labels, dict):
        by_name = labels
    else:
        by_name = {series.activity: series for series in labels}
    missing = [name for name in states.names if name not in by_name]
    if missing:
        raise GridMismatch(f"no label series for states: {', '.join(missing)}")

    series = [by_name[name] for name in states.names]
    grid = series[0].starts
    for s in series[1:]:
        if s.starts != grid:
            raise GridMismatch(
                f"label series {s.activity!r} is not on the same window grid as {series[0].activity!r}"
            )

    sequence: list[int] = []
    for w in range(len(grid)):
        for state_idx, s in enumerate(series):
            if s.active[w] and (w == 0 or not s.active[w - 1]):
                sequence.append(state_idx)
    return sequence


def estimate_transition_matrix(
    sequence: list[int] | np.ndarray, states: ActivitySet, smoothing: float = 0.0
) -> TransitionMatrix:
    """Maximum-likelihood transition matrix (optionally Laplace-smoothed).

    P[i][j] = (counts[i][j] + a) / (row_count[i] + a*K); with a = 0, unobserved
    rows are left all-zero and flagged rather than normalized.
    """
    seq = np.asarray(sequence, dtype=int)
    if len(seq) < 2:
        raise SequenceTooShort("need at least 2 onsets to estimate transitions")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    k = len(states)
    if seq.min() < 0 or seq.max() >= k:
        raise ValueError("sequence contains indices outside the state space")

    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (seq[:-1], seq[1:]), 1)

    row_totals = counts.sum(axis=1)
    row_observed = row_totals > 0
    P = np.zeros((k, k), dtype=float)
    if smoothing > 0:
        P = (counts + smoothing) / (row_totals + smoothing * k)[:, None]
        row_observed = np.ones(k, dtype=bool)
    else:
        for i in np.flatnonzero(row_observed):
            P[i] = counts[i] / row_totals[i]
    return TransitionMatrix(
        states=states, P=P, counts=counts, smoothing=smoothing, row_observed=row_observed
    )


def _strongly_connected(adjacency: np.ndarray) -> bool:
    def reachable(adj):
        seen = {0}
        frontier = [0]
        while frontier:
            node = frontier.pop()
            for nxt in np.flatnonzero(adj[node]):
                if nxt not in seen:
                    seen.add(int(nxt))
                    frontier.append(int(nxt))
        return len(seen) == adj.shape[0]

    return reachable(adjacency) and reachable(adjacency.T)


def stationary_distribution(matrix: TransitionMatrix | np.ndarray) -> np.ndarray:
    """Stationary probabilities via power iteration to 1e-10.

    Iterates the half-lazy kernel (P + I)/2, which shares the fixed point but
    converges for periodic chains too; the residual is checked against P.
    """
    if isinstance(matrix, TransitionMatrix):
        if not matrix.row_observed.all():
            raise ZeroRow("transition matrix has unobserved rows")
        P = matrix.P
    else:
        P = np.asarray(matrix, dtype=float)
        if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
            raise ZeroRow("matrix rows must sum to 1")
    if not _strongly_connected(P > 0):
        raise ReducibleChain("chain is not irreducible")

    k = P.shape[0]
    lazy = 0.5 * (P + np.eye(k))
    pi = np.full(k, 1.0 / k)
    for _ in range(1_000_000):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < STATIONARY_TOL / 4:
            pi = nxt
            break
        pi = nxt
    residual = np.abs(pi @ P - pi).sum()
    if residual > STATIONARY_TOL:
        raise ReducibleChain(f"power iteration failed to converge (residual {residual:.2e})")
    return pi


def write_profile_csv(profiles: list[HourlyProfile], path: Path | str) -> None:
    """Plot-ready long format: `activity,hour,frequency`."""
    lines = ["activity,hour,frequency"]
    for profile in profiles:
        for hour in range(24):
            lines.append(f"{profile.activity},{hour},{format_float(profile.frequency[hour])}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_transitions_json(matrix: TransitionMatrix, path: Path | str) -> None:
    doc = {
        "states": list(matrix.states.names),
        "counts": [[int(v) for v in row] for row in matrix.counts],
        "P": [[float(v) for v in row] for row in matrix.P],
        "smoothing": float(matrix.smoothing),
        "row_observed": [bool(v) for v in matrix.row_observed],
    }
    atomic_write_text(Path(path), json.dumps(doc, indent=2) + "\n")
