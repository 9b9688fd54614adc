import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from msraw.errors import CalibrationError, ConfigError, RangeError
from msraw.noise import (NoiseParams, default_adu_grid, load_profile, noise_params, profile_from_dict, sample_noise,
                         snr_db, stats_curves, total_variance)

from conftest import PROFILE_DIR, make_profile

EXAMPLE = dict(k0=5e-6, k1=1e-5, b0=1e-10, b1=1e-8, b2=1e-6)


def test_noise_params_example():
    # 5e-6*6400 + 1e-5 = 0.03201 ; 1e-10*6400^2 + 1e-8*6400 + 1e-6 = 0.004161
    p = noise_params(make_profile(**EXAMPLE), 6400)
    assert p.sigma2_shot == pytest.approx(0.03201, abs=1e-9)
    assert p.sigma2_read == pytest.approx(4.161e-3, abs=1e-9)


def test_zero_coefficients():
    p = noise_params(make_profile(k0=0, k1=0, b0=0, b1=0, b2=0), 3000)
    assert (p.sigma2_shot, p.sigma2_read) == (0.0, 0.0)


def test_shot_linear_in_iso():
    prof = make_profile(k0=3e-7, k1=0.0)
    assert noise_params(prof, 6400).sigma2_shot == pytest.approx(2 * noise_params(prof, 3200).sigma2_shot)


def test_out_of_range_iso_warns():
    with pytest.warns(UserWarning, match="outside"):
        noise_params(make_profile(), 100)


def test_negative_variance_is_calibration_error():
    with pytest.raises(CalibrationError, match="neg"):
        make_profile(name="broken", b2=-1.0)


def test_total_variance():
    p = NoiseParams(0.03201, 0.004161, 6400)
    assert total_variance(p, 0.0) == p.sigma2_read
    assert total_variance(p, 0.5) == pytest.approx(0.020166, abs=1e-9)
    with pytest.raises(RangeError):
        total_variance(p, -0.1)


@given(st.floats(0, 1), st.floats(0, 1))
def test_total_variance_monotone(a, b):
    p = NoiseParams(0.01, 0.001, 6400)
    assert total_variance(p, min(a, b)) <= total_variance(p, max(a, b))


class TestSampling:
    def test_zero_params_give_zero_noise(self):
        n = sample_noise(NoiseParams(0, 0, 6400), np.full(100, 0.3), np.random.default_rng(0))
        assert np.all(n == 0)

    def test_empirical_variance(self):
        p = NoiseParams(0.02, 0.003, 6400)
        x = 0.4
        n = sample_noise(p, np.full(10**6, x), np.random.default_rng(1))
        expected = 0.02 * x + 0.003
        assert abs(n.var() / expected - 1) < 0.02
        assert abs(n.mean()) < 4 * np.sqrt(expected / n.size)

    def test_determinism(self):
        p = NoiseParams(0.02, 0.003, 6400)
        x = np.full((4, 8, 8), 0.2)
        a = sample_noise(p, x, np.random.default_rng(5))
        b = sample_noise(p, x, np.random.default_rng(5))
        c = sample_noise(p, x, np.random.default_rng(6))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_negative_signal_clamped(self):
        p = NoiseParams(1.0, 0.0, 6400)
        assert np.all(sample_noise(p, np.full(10, -1e-9), np.random.default_rng(0)) == 0)


class TestSnr:
    def test_unit_ratio(self):
        x = 0.05
        assert snr_db(NoiseParams(x, 0.0, 6400), x) == pytest.approx(0.0, abs=1e-12)

    def test_doubling_under_read_noise(self):
        p = NoiseParams(0.0, 1e-4, 6400)
        assert snr_db(p, 0.2) - snr_db(p, 0.1) == pytest.approx(20 * np.log10(2), abs=1e-9)

    def test_monotone_on_grid(self):
        p = noise_params(make_profile(), 9000)
        s = snr_db(p, np.linspace(1e-4, 1, 5000))
        assert np.all(np.diff(s) > 0)

    def test_nonpositive_signal(self):
        with pytest.raises(RangeError):
            snr_db(NoiseParams(0.1, 0.1, 6400), 0.0)


class TestStatsCurves:
    def test_single_point(self):
        prof = make_profile()
        iso_rows, adu_rows = stats_curves(prof, [5000], [100.0], iso=5000)
        p = noise_params(prof, 5000)
        assert iso_rows == [{"iso": 5000, "sigma2_shot": p.sigma2_shot, "sigma2_read": p.sigma2_read}]
        x = 100.0 / (prof.white_level - prof.black_level)
        assert adu_rows[0]["sigma2"] == total_variance(p, x)
        assert adu_rows[0]["snr_db"] == snr_db(p, x)

    def test_polynomial_shapes(self):
        prof = make_profile()
        grid = list(range(2400, 12801, 800))
        iso_rows, _ = stats_curves(prof, grid, [10.0])
        shot = np.array([r["sigma2_shot"] for r in iso_rows])
        read = np.array([r["sigma2_read"] for r in iso_rows])
        assert np.allclose(np.diff(shot, 2), 0, atol=1e-15)
        assert np.allclose(np.diff(read, 2), 2 * prof.b0 * 800**2, rtol=1e-6, atol=1e-16)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            stats_curves(make_profile(), [], [1.0])


class TestProfiles:
    def test_shipped_profiles_load(self):
        names = {load_profile(p).name for p in sorted(PROFILE_DIR.glob("*.yaml"))}
        assert names == {f"sensor{i}" for i in range(1, 7)}

    def test_units_flag_mandatory(self):
        with pytest.raises(ConfigError, match="units"):
            profile_from_dict({"name": "x", "k0": 0, "k1": 0, "b0": 0, "b1": 0, "b2": 0,
                               "black_level": 0, "white_level": 1023, "awb": {"D65": [2, 1.5]}})

    def test_invalid_units(self):
        with pytest.raises(ConfigError):
            profile_from_dict({"units": "volts"})

    def test_adu_conversion(self):
        d = {"name": "a", "units": "adu", "k0": 1e-3, "k1": 0.5, "b0": 1e-6, "b1": 1e-3, "b2": 4.0,
             "black_level": 0, "white_level": 1000, "awb": {"D65": [2, 1.5], "D50": [1.8, 1.7]}}
        prof = profile_from_dict(d)
        # a signal of x ADU has variance k*x + r in ADU^2; in normalized units divide by 1000^2
        p_adu_shot = 1e-3 * 6400 + 0.5
        p_adu_read = 1e-6 * 6400**2 + 1e-3 * 6400 + 4.0
        x_adu = 300.0
        var_norm = total_variance(noise_params(prof, 6400), x_adu / 1000)
        assert var_norm == pytest.approx((p_adu_shot * x_adu + p_adu_read) / 1000**2, rel=1e-12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="nope.yaml"):
            load_profile(tmp_path / "nope.yaml")

    def test_three_element_gains(self, tmp_path):
        d = {"name": "a", "units": "normalized", "k0": 0, "k1": 0, "b0": 0, "b1": 0, "b2": 0,
             "black_level": 0, "white_level": 255, "awb": {"D65": [2, 1, 1.5], "D50": {"r": 1.8, "b": 1.7}}}
        path = tmp_path / "p.yaml"
        path.write_text(yaml.safe_dump(d))
        prof = load_profile(path)
        assert prof.awb_table["D65"].b_gain == 1.5
        assert prof.awb_table["D50"].r_gain == 1.8

    def test_default_adu_grid_is_increasing(self):
        g = default_adu_grid(make_profile())
        assert np.all(np.diff(g) > 0)
