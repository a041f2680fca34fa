import numpy as np
import pytest

from floss.errors import InputTooShort, InvalidSpec
from floss.spectral import (
    Periodogram,
    SpectralTransform,
    batch_periodogram,
    batch_power,
    n_bins,
    periodogram_dct,
    periodogram_dft,
)
from floss.timeseries import TimeSeriesTensor

from oracles import dct_power_direct, dft_power_direct


class TestDftExamples:
    def test_constant_signal_is_dc_only(self):
        p = periodogram_dft([1.0, 1.0, 1.0, 1.0])
        assert np.allclose(p.power, [4.0, 0.0, 0.0], atol=1e-12)

    def test_unit_impulse_is_flat(self):
        p = periodogram_dft([1.0, 0.0, 0.0, 0.0])
        assert np.allclose(p.power, [0.25, 0.25, 0.25], atol=1e-12)

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=8)
        fast = periodogram_dft(x).power
        direct = dft_power_direct(x)
        assert np.allclose(fast, direct, rtol=1e-12, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(InputTooShort):
            periodogram_dft([1.0])


class TestDctExamples:
    def test_constant_signal(self):
        p = periodogram_dct([1.0, 1.0, 1.0, 1.0])
        assert np.allclose(p.power, [2.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_negation_invariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=12)
        assert np.allclose(periodogram_dct(-x).power, periodogram_dct(x).power, atol=1e-12)

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=8)
        fast = periodogram_dct(x).power
        direct = dct_power_direct(x)
        assert np.allclose(fast, direct, rtol=1e-12, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(InputTooShort):
            periodogram_dct([2.0])


class TestBatch:
    def test_collection_shape(self):
        rng = np.random.default_rng(0)
        t = TimeSeriesTensor(rng.normal(size=(2, 4, 3)))
        grams = batch_periodogram(t, SpectralTransform.DFT)
        assert len(grams) == 6
        assert all(g.power.shape == (3,) for g in grams)
        grams = batch_periodogram(t, SpectralTransform.DCT)
        assert all(g.power.shape == (4,) for g in grams)

    def test_identical_slices_identical_grams(self):
        base = np.sin(np.arange(8.0))
        vals = np.tile(base[np.newaxis, :, np.newaxis], (3, 1, 2))
        grams = batch_periodogram(TimeSeriesTensor(vals), SpectralTransform.DFT)
        for g in grams[1:]:
            assert np.array_equal(g.power, grams[0].power)

    def test_slice_equivalence(self):
        rng = np.random.default_rng(5)
        t = TimeSeriesTensor(rng.normal(size=(1, 8, 1)))
        gram = batch_periodogram(t, SpectralTransform.DFT)[0]
        direct = periodogram_dft(t.values[0, :, 0])
        assert np.array_equal(gram.power, direct.power)

    def test_ordering_is_series_major(self):
        vals = np.zeros((2, 4, 2))
        vals[1, :, 1] = [1.0, -1.0, 1.0, -1.0]
        grams = batch_periodogram(TimeSeriesTensor(vals), SpectralTransform.DFT)
        assert grams[3].power.max() > 0  # (series 1, feature 1) is the last slot
        assert all(g.power.max() == 0 for g in grams[:3])


class TestInvariants:
    def test_circular_shift_invariance(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=64)
        base = periodogram_dft(x).power
        scale = base.max()
        for shift in range(1, 64):
            shifted = periodogram_dft(np.roll(x, shift)).power
            assert np.max(np.abs(shifted - base)) < 1e-9 * scale

    @pytest.mark.parametrize("n", [8, 9, 64, 65])
    def test_parseval_with_conjugate_symmetry(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n)
        power = periodogram_dft(x).power
        # double interior bins; DC always single, Nyquist single when n even
        weights = np.full(power.shape, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        assert np.sum(weights * power) == pytest.approx(np.sum(x**2), rel=1e-9)

    def test_nonnegative_power(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(2, 80))
            x = rng.normal(scale=rng.uniform(0.1, 100.0), size=n)
            assert np.all(periodogram_dft(x).power >= 0)
            assert np.all(periodogram_dct(x).power >= 0)

    @pytest.mark.parametrize("n", list(range(2, 40)) + [63, 64, 100, 127, 128, 255, 256])
    def test_fast_path_equals_direct_sum(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n)
        dft_scale = max(dft_power_direct(x).max(), 1.0)
        assert np.max(np.abs(periodogram_dft(x).power - dft_power_direct(x))) < 1e-10 * dft_scale
        dct_scale = max(dct_power_direct(x).max(), 1.0)
        assert np.max(np.abs(periodogram_dct(x).power - dct_power_direct(x))) < 1e-10 * dct_scale


class TestPeriodogramType:
    def test_bin_count_validation(self):
        with pytest.raises(InvalidSpec):
            Periodogram(np.ones(5), 4, SpectralTransform.DFT)
        with pytest.raises(InvalidSpec):
            Periodogram(np.ones(3), 4, SpectralTransform.DCT)
        with pytest.raises(InvalidSpec):
            Periodogram(-np.ones(3), 4, SpectralTransform.DFT)

    def test_n_bins(self):
        assert n_bins(9, SpectralTransform.DFT) == 5
        assert n_bins(9, SpectralTransform.DCT) == 9

    def test_batch_power_requires_three_axes(self):
        with pytest.raises(InvalidSpec):
            batch_power(np.zeros((4, 4)), SpectralTransform.DFT)
        with pytest.raises(InputTooShort):
            batch_power(np.zeros((1, 1, 1)), SpectralTransform.DFT)

    def test_transform_parse(self):
        assert SpectralTransform.parse(" DFT ") is SpectralTransform.DFT
        with pytest.raises(InvalidSpec):
            SpectralTransform.parse("wavelet")
