import numpy as np
import pytest

from actdetect import (
    build_state_sequence,
    default_config,
    estimate_transition_matrix,
    generate,
    hourly_distribution,
    simulate_state_sequence,
    stationary_distribution,
)
from actdetect.activity_model import ActivitySet, TransitionMatrix
from actdetect.errors import (
    GridMismatch,
    NoCompleteDays,
    ReducibleChain,
    SequenceTooShort,
    ZeroRow,
)
from actdetect.ingest import LabelSeries
from conftest import T0, hours


def day_series(activity, active_hours, days):
    starts = hours(days * 24)
    active = np.zeros(days * 24, dtype=bool)
    for d in range(days):
        for h in active_hours:
            active[d * 24 + h] = True
    return LabelSeries(activity=activity, starts=starts, active=active)


def series_from_bits(activity, bits):
    return LabelSeries(activity=activity, starts=hours(len(bits)), active=np.array(bits, dtype=bool))


STATES = ActivitySet(("Sleeping", "Grooming", "Food-Preparing", "Dish-Washing", "Doing Laundry"))


class TestHourlyDistribution:
    def test_daily_spike_at_hour_18(self):
        profile = hourly_distribution(day_series("cooking", [18], days=7))
        expected = np.zeros(24)
        expected[18] = 1.0
        np.testing.assert_array_equal(profile.frequency, expected)

    def test_never_active_is_all_zero(self):
        profile = hourly_distribution(day_series("laundry", [], days=3))
        np.testing.assert_array_equal(profile.frequency, np.zeros(24))

    def test_no_complete_day_rejected(self):
        series = series_from_bits("x", [True] * 10)
        with pytest.raises(NoCompleteDays):
            hourly_distribution(series)

    def test_matches_direct_tally(self, rng):
        bits = rng.random(24 * 30) < 0.3
        series = series_from_bits("x", bits)
        profile = hourly_distribution(series)
        grid = bits.reshape(30, 24)
        np.testing.assert_allclose(profile.frequency, grid.mean(axis=0))

    def test_span_days_restricts_tally(self):
        series = day_series("x", [6], days=10)
        bits = series.active.copy()
        bits[5 * 24 + 12] = True  # extra activation after the span cutoff
        series = series_from_bits("x", bits)
        profile = hourly_distribution(series, span_days=5)
        assert profile.frequency[12] == 0.0
        assert profile.frequency[6] == 1.0

    def test_200_day_corpus_recovers_planted_probabilities(self):
        config = default_config(seed=8, days=200, temp_coupling=False)
        result = generate(config)
        for activity in config.activities:
            profile = hourly_distribution(result.labels[activity.name])
            dev = np.abs(profile.frequency - activity.hourly_activation)
            assert dev.max() <= 0.05, f"{activity.name}: {dev.max():.4f}"


class TestStateSequence:
    def test_simple_onset_order(self):
        a = series_from_bits("A", [False, True, False, True, False])
        b = series_from_bits("B", [False, False, True, False, False])
        seq = build_state_sequence([a, b], ActivitySet(("A", "B")))
        assert seq == [0, 1, 0]

    def test_simultaneous_onsets_tie_break_by_state_order(self):
        a = series_from_bits("A", [False, True, False])
        b = series_from_bits("B", [False, True, False])
        assert build_state_sequence([a, b], ActivitySet(("A", "B"))) == [0, 1]
        assert build_state_sequence([a, b], ActivitySet(("B", "A"))) == [0, 1]  # B first now

    def test_multi_hour_run_is_single_onset(self):
        a = series_from_bits("A", [False, True, True, True, False])
        assert build_state_sequence([a], ActivitySet(("A",))) == [0]

    def test_initially_active_window_counts_as_onset(self):
        a = series_from_bits("A", [True, False, True])
        assert build_state_sequence([a], ActivitySet(("A",))) == [0, 0]

    def test_appending_inactive_windows_changes_nothing(self):
        bits = [False, True, False, True]
        a = series_from_bits("A", bits)
        extended = series_from_bits("A", bits + [False] * 5)
        states = ActivitySet(("A",))
        assert build_state_sequence([a], states) == build_state_sequence([extended], states)

    def test_grid_mismatch_rejected(self):
        a = series_from_bits("A", [False, True])
        b = LabelSeries(activity="B", starts=hours(3)[1:], active=np.array([True, False]))
        with pytest.raises(GridMismatch):
            build_state_sequence([a, b], ActivitySet(("A", "B")))

    def test_missing_state_rejected(self):
        a = series_from_bits("A", [False, True])
        with pytest.raises(GridMismatch):
            build_state_sequence([a], ActivitySet(("A", "B")))


class TestTransitionMatrix:
    def test_alternating_chain(self):
        states = ActivitySet(("A", "B"))
        tm = estimate_transition_matrix([0, 1, 0, 1, 0], states)
        np.testing.assert_array_equal(tm.P, [[0.0, 1.0], [1.0, 0.0]])

    def test_reference_five_state_rows(self):
        # S-G-S-F-D walk whose outgoing tallies give row S = [0,1/6,5/6,0,0]
        # and row D = [4/7,0,0,3/7,0]; the never-visited laundry row stays zero.
        S, G, F, D = 0, 1, 2, 3
        walk = [S, G, S, F, D, S, F, D, S, F, D, S, F, D, D, D, D, S, F, D]
        tm = estimate_transition_matrix(walk, STATES)
        np.testing.assert_allclose(tm.P[S], [0, 1 / 6, 5 / 6, 0, 0])
        np.testing.assert_allclose(tm.P[D], [4 / 7, 0, 0, 3 / 7, 0])
        assert not tm.row_observed[4]
        np.testing.assert_array_equal(tm.P[4], np.zeros(5))

    def test_observed_rows_sum_to_one(self, rng):
        seq = rng.integers(0, 5, size=400)
        tm = estimate_transition_matrix(seq, STATES)
        sums = tm.P[tm.row_observed].sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_smoothing_makes_every_row_stochastic(self, rng):
        seq = [0, 1, 0, 1]  # states 2..4 unobserved
        tm = estimate_transition_matrix(seq, STATES, smoothing=0.5)
        np.testing.assert_allclose(tm.P.sum(axis=1), np.ones(5), atol=1e-12)
        assert tm.row_observed.all()

    def test_counts_conservation(self, rng):
        for _ in range(10):
            seq = rng.integers(0, 5, size=int(rng.integers(2, 300)))
            tm = estimate_transition_matrix(seq, STATES)
            assert tm.counts.sum() == len(seq) - 1

    def test_short_sequence_rejected(self):
        with pytest.raises(SequenceTooShort):
            estimate_transition_matrix([0], STATES)

    def test_monte_carlo_recovery(self):
        planted = np.array([
            [0.2, 0.5, 0.3],
            [0.6, 0.1, 0.3],
            [0.25, 0.25, 0.5],
        ])
        seq = simulate_state_sequence(planted, 20_000, seed=3)
        tm = estimate_transition_matrix(seq, ActivitySet(("a", "b", "c")))
        assert np.abs(tm.P - planted).sum(axis=1).max() < 0.05


class TestStationaryDistribution:
    def test_symmetric_swap(self):
        np.testing.assert_allclose(
            stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]])), [0.5, 0.5]
        )

    def test_identity_is_reducible(self):
        with pytest.raises(ReducibleChain):
            stationary_distribution(np.eye(3))

    def test_zero_row_rejected(self):
        states = ActivitySet(("a", "b"))
        tm = estimate_transition_matrix([0, 0, 0], states)  # b never visited
        with pytest.raises(ZeroRow):
            stationary_distribution(tm)

    def test_random_chain_matches_eigenvector_and_long_run(self, rng):
        P = rng.random((5, 5)) + 0.05
        P /= P.sum(axis=1, keepdims=True)
        pi = stationary_distribution(P)
        w, v = np.linalg.eig(P.T)
        lead = np.real(v[:, np.argmax(np.real(w))])
        lead /= lead.sum()
        np.testing.assert_allclose(pi, lead, atol=1e-8)
        seq = simulate_state_sequence(P, 200_000, seed=17)
        empirical = np.bincount(seq, minlength=5) / len(seq)
        np.testing.assert_allclose(pi, empirical, atol=5e-3)
        assert pi.sum() == pytest.approx(1.0, abs=1e-12)
