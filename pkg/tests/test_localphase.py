import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lusphys.localphase import (
    LogGaborParams,
    MonogenicComponents,
    enhance,
    local_phase_image,
    log_gabor_spectrum,
    lpi_from_image,
    monogenic,
)


class TestEnhance:
    def test_fixed_point(self):
        np.testing.assert_array_equal(enhance(np.array([[1.0, 0.0], [0.0, 0.0]])), [[1, 0], [0, 0]])

    def test_half_with_unit_max(self):
        out = enhance(np.array([[0.5, 1.0], [0.0, 0.0]]))
        assert out[0, 0] == 0.0625

    def test_two_levels(self):
        out = enhance(np.array([[0.5, 0.9], [0.5, 0.9]]))
        np.testing.assert_allclose(out[0], [0.0625 / 0.6561, 1.0], rtol=1e-12)
        assert out[0, 0] == pytest.approx(0.09526, abs=5e-6)


class TestLogGabor:
    def test_peak_at_centre_frequency(self):
        g = log_gabor_spectrum(64, 64, LogGaborParams(wavelength0=8.0))
        assert g[8, 0] == pytest.approx(1.0)
        assert g[0, 8] == pytest.approx(1.0)
        assert g.max() == pytest.approx(1.0)

    def test_dc_is_zero(self):
        assert log_gabor_spectrum(31, 17)[0, 0] == 0.0

    def test_octave_above_centre(self):
        g = log_gabor_spectrum(64, 64, LogGaborParams(wavelength0=8.0, sigma_ratio=0.55))
        want = math.exp(-(math.log(2) ** 2) / (2 * math.log(0.55) ** 2))
        assert g[16, 0] == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(0.5106182, abs=1e-7)

    def test_matches_closed_form_everywhere(self):
        g = log_gabor_spectrum(20, 26, LogGaborParams(12.0, 0.6))
        ref, _, _ = oracles.monogenic_filters_closed_form(20, 26, 12.0, 0.6)
        np.testing.assert_allclose(g, ref, rtol=1e-12, atol=1e-300)

    @pytest.mark.parametrize("w, s", [(2.0, 0.5), (1.0, 0.5), (32.0, 0.0), (32.0, 1.0)])
    def test_invalid_params(self, w, s):
        with pytest.raises(ValueError):
            LogGaborParams(w, s)


class TestMonogenic:
    def test_zero_image(self):
        m = monogenic(np.zeros((16, 16)))
        for c in (m.m1, m.m2, m.m3):
            np.testing.assert_array_equal(c, 0.0)

    def test_horizontal_grating_has_no_lateral_odd_part(self):
        rows = np.arange(128)[:, None]
        img = np.cos(2 * np.pi * rows / 32.0) * np.ones((1, 96))
        m = monogenic(img)
        assert np.abs(m.m3).max() < 1e-6 * np.abs(m.m1).max()
        assert np.abs(m.m2).max() > 0.1 * np.abs(m.m1).max()

    @pytest.mark.parametrize("shape", [(32, 32), (31, 27), (16, 24)])
    def test_spatial_convolution_oracle(self, shape, rng):
        img = rng.random(shape)
        got = monogenic(img)
        want = oracles.monogenic_spatial(img)
        for g, w in zip((got.m1, got.m2, got.m3), want):
            assert np.abs(g - w).max() <= 1e-6 * np.abs(w).max()

    def test_cached_filters_are_read_only(self):
        from lusphys.localphase import _filters

        g, h2, h3 = _filters(8, 8, LogGaborParams())
        with pytest.raises(ValueError):
            g[0, 0] = 1.0


class TestLocalPhase:
    def _lpi(self, m1, m2, m3):
        arr = lambda v: np.full((2, 2), float(v))
        return local_phase_image(MonogenicComponents(arr(m1), arr(m2), arr(m3)))

    def test_pure_even(self):
        np.testing.assert_array_equal(self._lpi(0.5, 0, 0), 1.0)

    def test_balanced(self):
        np.testing.assert_allclose(self._lpi(0.3, 0.3 * 0.6, 0.3 * 0.8), 0.5, atol=1e-12)

    def test_pure_odd(self):
        assert self._lpi(1e-12, 1e3, 0).max() < 1e-9

    def test_sign_of_even_part_ignored(self):
        np.testing.assert_allclose(self._lpi(-0.4, 0.1, 0.2), self._lpi(0.4, 0.1, 0.2))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(8, 48), st.integers(8, 48))
    def test_range(self, seed, rows, cols):
        img = np.random.default_rng(seed).random((rows, cols))
        lpi = lpi_from_image(img)
        assert lpi.min() >= 0.0 and lpi.max() <= 1.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_contrast_invariance(self, seed, a):
        img = np.random.default_rng(seed).random((32, 40))
        base = lpi_from_image(img, enhanced=False)
        np.testing.assert_allclose(lpi_from_image(a * img, enhanced=False), base, atol=1e-6)

    @pytest.mark.parametrize("line_row", [40, 64, 90])
    def test_single_line_row_is_located(self, line_row, rng):
        img = 0.1 * (1 + 0.05 * rng.standard_normal((128, 128)))
        img[line_row - 1 : line_row + 2] = 1.0
        lpi = lpi_from_image(img)
        assert abs(int(np.argmax(lpi.mean(axis=1))) - line_row) <= 1
