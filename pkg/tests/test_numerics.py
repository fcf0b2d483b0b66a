"""Numeric kernel tests: FFT round trips, softmax contracts, RNG streams."""

import numpy as np
import pytest

from warpview.numerics import derive_stream, fft2, ifft2, randn, rng_stream, softmax_rows


class TestFFT:
    def test_constant_image_concentrates_at_dc(self):
        """DFT of a constant c is c*H*W at DC and zero elsewhere."""
        c = 0.37
        spec = fft2(np.full((6, 9), c))
        assert spec[0, 0] == pytest.approx(c * 6 * 9, abs=1e-12)
        spec[0, 0] = 0
        assert np.abs(spec).max() < 1e-12

    def test_impulse_spreads_flat(self):
        """DFT of a delta at the origin is 1 in every bin."""
        x = np.zeros((8, 8))
        x[0, 0] = 1.0
        np.testing.assert_allclose(fft2(x), np.ones((8, 8)), atol=1e-12)

    def test_round_trip(self):
        rng = rng_stream(1)
        x = rng.standard_normal((8, 8))
        back = ifft2(fft2(x))
        assert np.abs(back - x).max() / np.abs(x).max() < 1e-9
        assert np.abs(back.imag).max() < 1e-12

    def test_parseval(self):
        """sum|x|^2 == sum|F|^2 / (H*W) under the unnormalized-forward convention."""
        rng = rng_stream(2)
        for _ in range(20):
            x = rng.standard_normal((5, 7))
            lhs = np.sum(np.abs(x) ** 2)
            rhs = np.sum(np.abs(fft2(x)) ** 2) / (5 * 7)
            assert abs(lhs - rhs) / lhs < 1e-9

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            fft2(np.zeros(4))
        with pytest.raises(ValueError):
            ifft2(np.zeros((2, 2, 2)))


class TestSoftmaxRows:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(softmax_rows([[0.0, 0.0]]), [[0.5, 0.5]], atol=1e-15)

    def test_large_equal_entries_do_not_overflow(self):
        out = softmax_rows([[1000.0, 1000.0, 1000.0]])
        np.testing.assert_allclose(out, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)
        assert np.all(np.isfinite(out))

    def test_closed_form(self):
        """softmax([0, ln 3]) = [1, 3] / 4."""
        np.testing.assert_allclose(softmax_rows([[0.0, np.log(3.0)]]), [[0.25, 0.75]], atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = rng_stream(3)
        out = softmax_rows(rng.standard_normal((20, 13)) * 50)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(out >= 0)

    def test_shift_invariance(self):
        rng = rng_stream(4)
        m = rng.standard_normal((10, 6))
        shifts = rng.standard_normal((10, 1)) * 100
        a = softmax_rows(m)
        b = softmax_rows(m + shifts)
        assert np.abs(a - b).max() < 1e-12

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            softmax_rows([[0.0, np.nan]])


class TestRandomStreams:
    def test_seed_determinism(self):
        a = randn(rng_stream(42), [4])
        b = randn(rng_stream(42), [4])
        np.testing.assert_array_equal(a, b)

    def test_distinct_seeds_differ(self):
        assert not np.array_equal(randn(rng_stream(1), [8]), randn(rng_stream(2), [8]))

    def test_moments(self):
        """Sample mean and variance of 10^6 draws, bounds from the CLT at 5 sigma."""
        x = randn(rng_stream(7), 10**6)
        assert -0.01 < x.mean() < 0.01
        assert 0.99 < x.var() < 1.01

    def test_empty_shape(self):
        assert randn(rng_stream(0), [0]).shape == (0,)

    def test_labels_give_independent_reproducible_streams(self):
        a1 = derive_stream(5, "fill/0").standard_normal(6)
        a2 = derive_stream(5, "fill/0").standard_normal(6)
        b = derive_stream(5, "fill/1").standard_normal(6)
        c = derive_stream(6, "fill/0").standard_normal(6)
        np.testing.assert_array_equal(a1, a2)
        assert not np.array_equal(a1, b)
        assert not np.array_equal(a1, c)
