import numpy as np
import pytest

from actdetect import amplitude_spectrum, assemble, dft, standardize, time_domain_features
from actdetect.features import FeatureMatrix, Scaler, method_columns, save_matrix_csv
from actdetect.ingest import WindowRecord
from actdetect.errors import EmptyMatrix, MissingTemperature, WrongWindowLength
from conftest import T0, hours
from oracles import naive_dft, naive_dft_bin, two_pass_time_features


def make_windows(samples_list, temps=None, labels=None):
    starts = hours(len(samples_list))
    out = []
    for i, samples in enumerate(samples_list):
        out.append(
            WindowRecord(
                start=starts[i],
                samples=np.asarray(samples, dtype=float),
                temp_mean=None if temps is None else temps[i],
                label=None if labels is None else labels[i],
            )
        )
    return out


class TestTimeDomain:
    def test_constant_signal(self):
        np.testing.assert_allclose(time_domain_features(np.full(60, 1.0)), [0, 0, 0, 1.0, 1.0])

    def test_uniform_ramp_closed_forms(self):
        feats = time_domain_features(np.arange(60.0))
        np.testing.assert_allclose(feats, [1.0, 0.0, (60**2 - 1) / 12, 29.5, 59.0])
        assert feats[2] == pytest.approx(299.9166666666667)

    def test_random_windows_match_two_pass_reference(self, rng):
        for _ in range(50):
            x = rng.normal(size=60) ** 2
            np.testing.assert_allclose(time_domain_features(x), two_pass_time_features(x), rtol=1e-12)

    def test_wrong_length_rejected(self):
        with pytest.raises(WrongWindowLength):
            time_domain_features(np.ones(59))


class TestAmplitudeSpectrum:
    def test_constant_is_dc_only(self):
        spec = amplitude_spectrum(np.full(60, 2.5))
        assert spec[0] == pytest.approx(150.0, abs=1e-9)
        assert np.all(spec[1:] < 1e-9)

    def test_single_tone_bin_five(self):
        x = np.cos(2 * np.pi * np.arange(60) * 5 / 60)
        spec = amplitude_spectrum(x)
        assert spec[5] == pytest.approx(30.0, abs=1e-9)
        others = np.delete(spec, 5)
        assert np.all(others < 1e-9)

    def test_hundred_random_windows_match_naive_dft(self, rng):
        for _ in range(100):
            x = rng.random(60) * 3.0
            mine = amplitude_spectrum(x)
            ref = naive_dft(x, bins=10)
            np.testing.assert_allclose(mine, ref, rtol=1e-9, atol=1e-12)

    def test_dc_bin_is_sixty_times_mean(self, rng):
        x = rng.random(60)
        assert amplitude_spectrum(x)[0] == pytest.approx(60 * x.mean(), rel=1e-9)

    def test_linearity_via_complex_oracle(self, rng):
        x, y = rng.normal(size=60), rng.normal(size=60)
        a, b = 1.7, -0.6
        combined = np.abs(dft(a * x + b * y))[:10]
        expected = np.abs(a * dft(x) + b * dft(y))[:10]
        np.testing.assert_allclose(combined, expected, rtol=1e-9, atol=1e-12)

    def test_parseval_full_spectrum(self, rng):
        for _ in range(20):
            x = rng.normal(size=60)
            spectrum = np.abs(dft(x))
            lhs = (spectrum**2).sum()
            rhs = 60 * (x**2).sum()
            assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_wrong_length_rejected(self):
        with pytest.raises(WrongWindowLength):
            amplitude_spectrum(np.ones(64))

    def test_non_power_of_two_matches_naive_at_other_lengths(self, rng):
        for n in (12, 45, 37):  # includes a prime length
            x = rng.normal(size=n)
            np.testing.assert_allclose(np.abs(dft(x)), naive_dft(x), rtol=1e-9, atol=1e-12)


class TestAssemble:
    def test_m1_shape(self, rng):
        windows = make_windows([rng.random(60) for _ in range(3)])
        matrix = assemble(windows, "M1")
        assert matrix.rows.shape == (3, 10)
        assert matrix.columns == [f"f{k}" for k in range(10)]

    def test_m4_is_m3_plus_temperature(self, rng):
        samples = [rng.random(60) for _ in range(4)]
        temps = [21.0, 22.5, 25.0, 19.0]
        m3 = assemble(make_windows(samples), "M3")
        m4 = assemble(make_windows(samples, temps=temps), "M4")
        np.testing.assert_array_equal(m4.rows[:, :-1], m3.rows)
        np.testing.assert_array_equal(m4.rows[:, -1], temps)

    def test_m3_columns_match_independent_recompute(self, rng):
        samples = [rng.random(60) * 2 for _ in range(5)]
        matrix = assemble(make_windows(samples), "M3")
        for i, x in enumerate(samples):
            expected = np.concatenate([
                [abs(naive_dft_bin(x, k)) for k in range(10)],
                two_pass_time_features(x),
            ])
            np.testing.assert_allclose(matrix.rows[i], expected, rtol=1e-9, atol=1e-12)

    def test_m4_without_temperature_rejected(self, rng):
        windows = make_windows([rng.random(60) for _ in range(3)])
        with pytest.raises(MissingTemperature):
            assemble(windows, "M4")

    def test_minimal_time_feature_set(self, rng):
        windows = make_windows([rng.random(60) for _ in range(3)])
        matrix = assemble(windows, "M2", time_features="minimal")
        assert matrix.columns == ["d_mean", "var"]
        full = assemble(windows, "M2")
        np.testing.assert_array_equal(matrix.rows, full.rows[:, [0, 2]])

    def test_detrend_zeroes_dc_bin(self, rng):
        windows = make_windows([rng.random(60) + 5.0 for _ in range(3)])
        matrix = assemble(windows, "M1", detrend=True)
        assert np.all(matrix.rows[:, 0] < 1e-9)

    def test_extraction_is_per_window_pure(self, rng):
        samples = [rng.random(60) for _ in range(6)]
        full = assemble(make_windows(samples), "M3")
        partial = assemble(make_windows(samples[:2]), "M3")
        np.testing.assert_array_equal(full.rows[:2], partial.rows)


class TestStandardize:
    def test_two_point_column(self):
        matrix = FeatureMatrix("M2", ["a"], np.array([[1.0], [3.0]]), hours(2))
        out = standardize(matrix)
        np.testing.assert_allclose(out.rows[:, 0], [-1.0, 1.0])

    def test_constant_column_maps_to_zeros(self):
        matrix = FeatureMatrix("M2", ["a", "b"], np.array([[1.0, 7.0], [3.0, 7.0]]), hours(2))
        out = standardize(matrix)
        np.testing.assert_allclose(out.rows[:, 1], [0.0, 0.0])

    def test_training_stats_apply_to_held_out_rows(self, rng):
        train_rows = rng.normal(size=(20, 3)) * 4 + 2
        train = standardize(FeatureMatrix("M2", list("abc"), train_rows, hours(20)))
        heldout = rng.normal(size=(1, 3))
        z = train.scaler.apply(heldout)
        expected = (heldout - train_rows.mean(axis=0)) / train_rows.std(axis=0)
        np.testing.assert_allclose(z, expected)

    def test_empty_matrix_rejected(self):
        matrix = FeatureMatrix("M2", ["a"], np.zeros((0, 1)), [])
        with pytest.raises(EmptyMatrix):
            standardize(matrix)


def test_matrix_csv_header(tmp_path, rng):
    windows = make_windows([rng.random(60) for _ in range(2)], temps=[20.0, 21.0],
                           labels=[True, False])
    matrix = assemble(windows, "M4")
    path = tmp_path / "features.csv"
    save_matrix_csv(matrix, path)
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,d_mean,d_std,var,mean,max,temp_c,label"


def test_method_columns_layout():
    assert method_columns("M3") == method_columns("M1") + method_columns("M2")
    assert method_columns("M4")[-1] == "temp_c"
