"""Tests for the Bessel evaluators and the comb autocorrelation kernel."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnisynth.specfun import (BesselEvalPolicy, BesselOverflowError,
                               bessel_i, bessel_i_scaled, dirichlet_autocorr)


def series_oracle(order, x, terms=30):
    """Independent ascending-series oracle: sum (x/2)^(order+2k) / (k!(order+k)!)."""
    total = 0.0
    for k in range(terms):
        total += (x / 2.0) ** (order + 2 * k) / (
            math.factorial(k) * math.factorial(order + k)
        )
    return total


# e^{-x} I_n(x) reference values, frozen from a 40-digit mpmath evaluation.
SCALED_REFERENCE = [
    (0, 20.0, 0.089780311884826022),
    (7, 20.0, 0.025894012606505574),
    (0, 50.0, 0.056561626647454193),
    (12, 50.0, 0.013300837295159327),
    (0, 100.0, 0.039944379299096683),
    (2, 100.0, 0.039149496238594078),
    (0, 500.0, 0.017845706500153167),
    (3, 500.0, 0.017685656692156124),
    (40, 224.85313704207124, 0.00075975555640643219),
    (80, 224.85313704207124, 1.9696591021035953e-8),
    (120, 224.85313704207124, 6.256906285688736e-16),
    (360, 730.0, 2.1103419506362179e-40),
    (720, 730.0, 6.2531319039766964e-147),
]

# I_n(x) below the crossover, frozen from the same mpmath run.
UNSCALED_REFERENCE = [
    (0, 2.0, 2.2795853023360673),
    (1, 2.0, 1.5906368546373291),
    (5, 10.0, 777.18828640325996),
    (0, 19.5, 26760525.339838766),
    (3, 25.0, 4806356106.5065391),
]


class TestBesselI:
    def test_zero_argument(self):
        assert bessel_i(0, 0.0) == 1.0
        assert bessel_i(1, 0.0) == 0.0
        assert bessel_i(17, 0.0) == 0.0
        assert bessel_i_scaled(0, 0.0) == 1.0
        assert bessel_i_scaled(4, 0.0) == 0.0

    def test_series_oracle_small_x(self):
        assert bessel_i(0, 2.0) == pytest.approx(series_oracle(0, 2.0), rel=1e-13)
        assert bessel_i(3, 7.5) == pytest.approx(series_oracle(3, 7.5), rel=1e-13)
        assert bessel_i(10, 14.0) == pytest.approx(series_oracle(10, 14.0), rel=1e-13)

    @pytest.mark.parametrize("order,x,expected", UNSCALED_REFERENCE)
    def test_unscaled_reference(self, order, x, expected):
        assert bessel_i(order, x) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("order,x,expected", SCALED_REFERENCE)
    def test_scaled_reference(self, order, x, expected):
        assert bessel_i_scaled(order, x) == pytest.approx(expected, rel=1e-10)

    def test_scaled_unscaled_consistency(self):
        for order, x in [(0, 1.0), (2, 12.0), (0, 30.0), (5, 100.0),
                         (40, 224.8), (3, 500.0)]:
            unscaled = bessel_i(order, x)
            scaled = bessel_i_scaled(order, x)
            assert scaled == pytest.approx(unscaled * math.exp(-x), rel=1e-12)

    def test_monotone_in_x(self):
        # compare unscaled values via logs to avoid overflow
        xs = np.linspace(0.0, 400.0, 60)
        for order in (0, 1, 5, 40):
            logs = [math.log(bessel_i_scaled(order, x)) + x
                    for x in xs if bessel_i_scaled(order, x) > 0]
            assert all(b > a for a, b in zip(logs, logs[1:]))

    def test_order_ordering(self):
        for x in (0.5, 3.0, 25.0, 224.85):
            for order in (0, 1, 2, 10):
                assert bessel_i_scaled(order + 1, x) < bessel_i_scaled(order, x)

    def test_underflow_to_zero(self):
        # true value ~6.5e-671: below the double range, not an error
        assert bessel_i_scaled(1440, 500.0) == 0.0
        assert bessel_i(1440, 500.0) == 0.0

    def test_overflow_is_signalled(self):
        with pytest.raises(BesselOverflowError):
            bessel_i(0, 800.0)
        # the scaled variant stays finite there
        assert 0.0 < bessel_i_scaled(0, 800.0) < 1.0

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            bessel_i(-1, 1.0)
        with pytest.raises(ValueError):
            bessel_i(0, -1.0)
        with pytest.raises(ValueError):
            bessel_i(0, float("nan"))
        with pytest.raises(ValueError):
            bessel_i(0.5, 1.0)

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            BesselEvalPolicy(relative_tolerance=0.0)
        with pytest.raises(ValueError):
            BesselEvalPolicy(max_terms=0)

    @given(st.floats(min_value=0.0, max_value=500.0),
           st.integers(min_value=0, max_value=60))
    @settings(max_examples=60, deadline=None)
    def test_scaled_bounded_by_i0(self, x, order):
        value = bessel_i_scaled(order, x)
        assert 0.0 <= value <= bessel_i_scaled(0, x) + 1e-15


class TestDirichletAutocorr:
    def test_peak_is_exactly_one(self):
        assert dirichlet_autocorr(0.0, 256, 4.0 / 256) == 1.0 + 0.0j

    def test_zeros_at_integer_bins(self):
        n = 256
        delta_f = 4.0 / n
        delta_tau = 1.0 / (n * delta_f)
        for k in (1, 2, 77, 255):
            assert dirichlet_autocorr(k * delta_tau, n, delta_f) == 0.0 + 0.0j

    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_on_grid_orthogonality(self, n):
        delta_f = 4.0 / n
        delta_tau = 1.0 / (n * delta_f)
        values = dirichlet_autocorr(delta_tau * np.arange(n), n, delta_f)
        assert abs(np.sum(np.abs(values) ** 2) - 1.0) < 1e-12

    def test_off_grid_energy_conservation(self):
        # shifted comb columns keep unit norm for any real shift
        n = 128
        delta_f = 0.015625
        delta_tau = 1.0 / (n * delta_f)
        for shift in (0.123456, 3.9, 17.77):
            values = dirichlet_autocorr(
                delta_tau * np.arange(n) - shift, n, delta_f)
            assert np.sum(np.abs(values) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_periodicity(self):
        n = 64
        delta_f = 0.0625
        period = 1.0 / delta_f
        taus = np.linspace(-7.0, 7.0, 41)
        a0 = dirichlet_autocorr(taus, n, delta_f)
        a1 = dirichlet_autocorr(taus + period, n, delta_f)
        np.testing.assert_allclose(np.abs(a1), np.abs(a0), atol=1e-12)

    def test_single_tone(self):
        # N = 1: pure phase ramp, magnitude one everywhere
        values = dirichlet_autocorr(np.linspace(0, 5, 11), 1, 0.5)
        np.testing.assert_allclose(np.abs(values), 1.0, atol=1e-12)

    @given(st.floats(min_value=-1e3, max_value=1e3))
    @settings(max_examples=100, deadline=None)
    def test_magnitude_bounded(self, tau):
        value = dirichlet_autocorr(tau, 32, 0.125)
        assert abs(value) <= 1.0 + 1e-12

    def test_input_validation(self):
        with pytest.raises(ValueError):
            dirichlet_autocorr(0.0, 0, 0.1)
        with pytest.raises(ValueError):
            dirichlet_autocorr(0.0, 8, 0.0)
        with pytest.raises(ValueError):
            dirichlet_autocorr(float("inf"), 8, 0.1)

    def test_scalar_and_array_forms(self):
        scalar = dirichlet_autocorr(0.7, 16, 0.25)
        array = dirichlet_autocorr(np.array([0.7, 0.7]), 16, 0.25)
        assert isinstance(scalar, complex)
        assert array.shape == (2,)
        assert array[0] == scalar
