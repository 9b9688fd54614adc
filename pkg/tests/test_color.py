import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from msraw import color
from msraw.color import ColorCorrectionMatrix, WhiteBalanceGains
from msraw.errors import InvertibilityError, RangeError

unit = st.floats(0.0, 1.0, allow_nan=False)


def smoothstep_root(y):
    return brentq(lambda x: 3 * x * x - 2 * x**3 - y, 0.0, 1.0, xtol=1e-15)


class TestToneMap:
    def test_fixed_points(self):
        assert color.tone_map_inverse(0.5) == 0.5
        assert color.tone_map_inverse(0.0) == pytest.approx(0.0, abs=1e-12)
        assert color.tone_map_inverse(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_inverse_matches_root_finding(self):
        # root of 3x^2 - 2x^3 = 0.2 by bracketing: 0.28714072541674046
        assert color.tone_map_inverse(0.2) == pytest.approx(0.28714072541674046, abs=1e-12)
        assert color.tone_map_inverse(0.2) == pytest.approx(0.2871416, abs=1e-6)
        for y in (0.01, 0.3, 0.77, 0.99):
            assert color.tone_map_inverse(y) == pytest.approx(smoothstep_root(y), abs=1e-12)

    def test_forward_values(self):
        assert color.tone_map_forward(0.5) == 0.5
        assert color.tone_map_forward(0.28714072541674046) == pytest.approx(0.2, abs=1e-12)
        assert color.tone_map_forward(0.0) == 0.0
        assert color.tone_map_forward(1.0) == 1.0

    def test_round_trip_dense(self):
        y = np.random.default_rng(1).uniform(0, 1, 10_000)
        assert np.max(np.abs(color.tone_map_forward(color.tone_map_inverse(y)) - y)) <= 1e-9

    @pytest.mark.parametrize("bad", [-0.1, 1.2, np.nan])
    def test_range_error_names_value(self, bad):
        with pytest.raises(RangeError, match="outside"):
            color.tone_map_inverse(np.array([0.3, bad]))
        with pytest.raises(RangeError):
            color.tone_map_forward(bad)

    @given(unit, unit)
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert color.tone_map_inverse(lo) <= color.tone_map_inverse(hi)
        assert color.tone_map_forward(lo) <= color.tone_map_forward(hi)


class TestGamma:
    def test_examples(self):
        assert color.gamma_apply(1.0, 1 / 2.2) == 1.0
        assert color.gamma_invert(0.25, 1 / 2.2) == pytest.approx(0.047366, abs=1e-5)
        assert color.gamma_apply(0.0, 1 / 2.2) == pytest.approx(0.0, abs=1e-3)

    @given(st.floats(1e-8, 1.0), st.sampled_from([1 / 2.2, 0.25, 0.8, 1.0]))
    def test_round_trip(self, x, g):
        assert color.gamma_invert(color.gamma_apply(x, g), g) == pytest.approx(x, abs=1e-9)

    def test_rejects_negative_input_and_gamma(self):
        with pytest.raises(RangeError):
            color.gamma_apply(-0.1)
        with pytest.raises(RangeError):
            color.gamma_apply(0.5, 0.0)
        with pytest.raises(RangeError):
            color.gamma_invert(0.5, -1.0)


class TestCCM:
    def test_mix_endpoints_and_linearity(self):
        d, n = ColorCorrectionMatrix(np.eye(3)), ColorCorrectionMatrix(2 * np.eye(3))
        assert color.ccm_mix(d, n, 1.0) is d
        assert color.ccm_mix(d, n, 0.0) is n
        np.testing.assert_array_equal(color.ccm_mix(d, n, 0.5).m, 1.5 * np.eye(3))
        with pytest.raises(RangeError):
            color.ccm_mix(d, n, 1.5)

    def test_identity_is_bit_exact(self):
        img = np.random.default_rng(0).uniform(size=(3, 5, 7))
        out = color.ccm_apply(img, ColorCorrectionMatrix.identity())
        assert np.array_equal(out, img)

    def test_diagonal_action_and_round_trip(self):
        ccm = ColorCorrectionMatrix(np.diag([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(color.ccm_apply(np.array([0.1, 0.2, 0.3]), ccm), [0.1, 0.4, 0.9], atol=1e-15)
        img = np.random.default_rng(2).uniform(size=(3, 4, 4))
        back = color.ccm_invert(color.ccm_apply(img, ColorCorrectionMatrix(np.diag([2.0, 1, 1]))),
                                ColorCorrectionMatrix(np.diag([2.0, 1, 1])))
        np.testing.assert_allclose(back, img, atol=1e-6)

    def test_general_round_trip(self):
        rng = np.random.default_rng(3)
        ccm = ColorCorrectionMatrix(np.eye(3) + 0.3 * rng.normal(size=(3, 3)))
        img = rng.uniform(size=(3, 6, 6))
        np.testing.assert_allclose(color.ccm_invert(color.ccm_apply(img, ccm), ccm), img, atol=1e-6)

    def test_singular_rejected(self):
        with pytest.raises(InvertibilityError):
            ColorCorrectionMatrix(np.ones((3, 3)))


class TestWhiteBalance:
    def test_invariants(self):
        with pytest.raises(RangeError):
            WhiteBalanceGains(0.0, 1.0)
        with pytest.raises(RangeError):
            WhiteBalanceGains(1.0, 1.0, g_gain=1.2)

    def test_apply(self):
        px = np.array([0.1, 0.2, 0.4])
        np.testing.assert_array_equal(color.wb_apply(px, WhiteBalanceGains(1, 1)), px)
        np.testing.assert_allclose(color.wb_apply(px, WhiteBalanceGains(2.0, 0.5)), [0.2, 0.2, 0.2])

    def test_round_trip_below_threshold(self):
        g = WhiteBalanceGains(1.9, 1.6)
        img = np.random.default_rng(4).uniform(0, 0.47, size=(3, 8, 8))
        np.testing.assert_allclose(color.wb_apply(color.wb_invert_safe(img, g), g), img, atol=1e-12)

    def test_safe_unity_gains_unchanged(self):
        img = np.random.default_rng(5).uniform(size=(3, 4, 4))
        np.testing.assert_array_equal(color.wb_invert_safe(img, WhiteBalanceGains(1, 1)), img)

    def test_saturated_pixel_blends_toward_white(self):
        out = color.wb_invert_safe(np.array([1.0, 1.0, 1.0]), WhiteBalanceGains(2.0, 1.0))
        assert 0.5 < out[0] <= 1.0

    def test_below_threshold_is_plain_scaling(self):
        out = color.wb_invert_safe(np.array([0.5, 0.5, 0.5]), WhiteBalanceGains(2.0, 1.0))
        assert out[0] == 0.25

    @given(st.lists(unit, min_size=3, max_size=3), st.floats(0.3, 4.0), st.floats(0.3, 4.0))
    def test_exact_plain_scaling_at_or_below_threshold(self, px, r, b):
        px = np.array(px)
        gains = WhiteBalanceGains(r, b)
        out = color.wb_invert_safe(px, gains)
        plain = px * (1.0 / gains.as_array())
        mask = px <= 0.9
        assert np.array_equal(out[mask], plain[mask])

    @given(st.floats(1.01, 4.0))
    @settings(max_examples=50)
    def test_safe_inverse_is_monotone(self, r):
        x = np.linspace(0, 1, 2001)
        out = color.safe_inverse_scale(np.stack([x, x, x]), np.array([1 / r, 1.0, 1.0]))[0]
        assert np.all(np.diff(out) >= 0)

    def test_threshold_range(self):
        with pytest.raises(RangeError):
            color.wb_invert_safe(np.zeros(3), WhiteBalanceGains(1, 1), threshold=1.0)


class TestGain:
    def test_examples(self):
        x = np.random.default_rng(6).uniform(size=10)
        assert np.array_equal(color.gain_apply(x, 1.0), x)
        assert color.gain_apply(1.0, 0.65) == 0.65
        np.testing.assert_allclose(color.gain_apply(color.gain_apply(x, 0.65), 1 / 0.65), x, atol=1e-9)

    def test_no_clipping(self):
        assert color.gain_apply(0.9, 2.0) == 1.8

    def test_rejects_nonpositive(self):
        with pytest.raises(RangeError):
            color.gain_apply(1.0, 0.0)
