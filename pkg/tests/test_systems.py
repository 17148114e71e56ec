"""Structural tests for the per-period system builders.

The golden layouts cover the three regimes of the 4-variable, p=3 example
(balanced period, one newly missing monthly variable, two missing monthly
variables) and are written out entry by entry with a random coefficient
matrix and Cholesky factor, so any indexing slip shows up exactly.
"""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from mfsmooth import FormulationError, build_aggregation, intra_quarterly_average
from mfsmooth.model import ObservationPattern
from mfsmooth.systems import (
    AdaptiveIndex,
    balanced_index,
    build_adaptive_D,
    build_adaptive_G,
    build_adaptive_H,
    build_adaptive_T,
    build_adaptive_Z,
    build_adaptive_C,
    build_companion_system,
    build_compact_system,
    exog_vector,
)
from test_model import random_params


@pytest.fixture
def setup():
    params = random_params(3, 1, 3, seed=12)
    agg = build_aggregation(intra_quarterly_average(), 3, 1, 3)
    return params, agg


def Pi(params, lag, i, j):
    """Element (i, j), 1-based, of the lag-``lag`` coefficient matrix."""
    return params.lag_coeffs[lag - 1][i - 1, j - 1]


class TestBalancedRegime:
    def test_Z(self, setup):
        params, agg = setup
        idx = balanced_index(3, 1)
        Z = build_adaptive_Z(params, agg, idx, np.array([0]))
        expected = np.zeros((4, 4))
        for i in (1, 2, 3):
            for lag in (1, 2, 3):
                expected[i - 1, lag] = Pi(params, lag, i, 4)
        expected[3, :3] = 1.0 / 3.0
        assert_array_equal(Z, expected)

    def test_Z_quarterly_unobserved_drops_last_row(self, setup):
        params, agg = setup
        idx = balanced_index(3, 1)
        Z = build_adaptive_Z(params, agg, idx, np.array([], dtype=int))
        full = build_adaptive_Z(params, agg, idx, np.array([0]))
        assert_array_equal(Z, full[:3])

    def test_C(self, setup):
        params, agg = setup
        idx = balanced_index(3, 1)
        C = build_adaptive_C(params, idx, np.array([0]))
        expected = np.zeros((4, 9))
        for i in (1, 2, 3):
            for j in (1, 2, 3):
                for lag in (1, 2, 3):
                    expected[i - 1, (j - 1) * 3 + lag - 1] = Pi(params, lag, i, j)
        assert_array_equal(C, expected)

    def test_T(self, setup):
        params, _ = setup
        idx = balanced_index(3, 1)
        T = build_adaptive_T(params, idx)
        expected = np.zeros((4, 4))
        for lag in (1, 2, 3):
            expected[0, lag - 1] = Pi(params, lag, 4, 4)
        expected[1, 0] = expected[2, 1] = expected[3, 2] = 1.0
        assert_array_equal(T, expected)

    def test_D(self, setup):
        params, _ = setup
        idx = balanced_index(3, 1)
        D = build_adaptive_D(params, idx)
        expected = np.zeros((4, 9))
        for j in (1, 2, 3):
            for lag in (1, 2, 3):
                expected[0, (j - 1) * 3 + lag - 1] = Pi(params, lag, 4, j)
        assert_array_equal(D, expected)

    def test_G_and_H(self, setup):
        params, agg = setup
        idx = balanced_index(3, 1)
        W = params.chol(0)
        G = build_adaptive_G(params, idx, np.array([0]), 0)
        expected_G = np.zeros((4, 4))
        expected_G[:3] = W[:3]
        assert_array_equal(G, expected_G)
        H = build_adaptive_H(params, idx, 0)
        expected_H = np.zeros((4, 4))
        expected_H[0] = W[3]
        assert_array_equal(H, expected_H)


class TestOneMissingRegime:
    """U_t = {3} (1-based), U_{t-1} empty; state stacks (x_3, x_q) x 4 lags."""

    @pytest.fixture
    def idx(self):
        return AdaptiveIndex(np.array([2]), np.array([0, 1]), np.array([], dtype=int),
                             np.array([0, 1, 2]), 3, 1)

    def test_T(self, setup, idx):
        params, _ = setup
        T = build_adaptive_T(params, idx)
        expected = np.zeros((8, 4))
        for lag in (1, 2, 3):
            expected[0, lag - 1] = Pi(params, lag, 3, 4)
            expected[1, lag - 1] = Pi(params, lag, 4, 4)
        expected[3, 0] = expected[5, 1] = expected[7, 2] = 1.0
        assert_array_equal(T, expected)

    def test_D(self, setup, idx):
        params, _ = setup
        D = build_adaptive_D(params, idx)
        expected = np.zeros((8, 9))
        for j in (1, 2, 3):
            for lag in (1, 2, 3):
                expected[0, (j - 1) * 3 + lag - 1] = Pi(params, lag, 3, j)
                expected[1, (j - 1) * 3 + lag - 1] = Pi(params, lag, 4, j)
        # lag identities of variable 3, observed at t-1 but latent now
        expected[2, 6] = expected[4, 7] = expected[6, 8] = 1.0
        assert_array_equal(D, expected)

    def test_Z(self, setup, idx):
        params, agg = setup
        Z = build_adaptive_Z(params, agg, idx, np.array([], dtype=int))
        # newly-latent columns (variable 3 in every lag group) are all zero
        assert_array_equal(Z[:, [0, 2, 4, 6]], np.zeros((2, 4)))
        condensed = Z[:, [1, 3, 5, 7]]
        expected = np.zeros((2, 4))
        for i in (1, 2):
            for lag in (1, 2, 3):
                expected[i - 1, lag] = Pi(params, lag, i, 4)
        assert_array_equal(condensed, expected)

    def test_G_and_H(self, setup, idx):
        params, _ = setup
        W = params.chol(0)
        G = build_adaptive_G(params, idx, np.array([], dtype=int), 0)
        assert_array_equal(G, W[:2])
        H = build_adaptive_H(params, idx, 0)
        expected = np.zeros((8, 4))
        expected[0] = W[2]
        expected[1] = W[3]
        assert_array_equal(H, expected)


class TestTwoMissingRegime:
    """U_t = {2, 3}, U_{t-1} = {3}; state stacks (x_2, x_3, x_q) x 4 lags."""

    @pytest.fixture
    def idx(self):
        return AdaptiveIndex(np.array([1, 2]), np.array([0]), np.array([2]),
                             np.array([0, 1]), 3, 1)

    def test_T(self, setup, idx):
        params, _ = setup
        T = build_adaptive_T(params, idx)
        expected = np.zeros((12, 8))
        for row, i in enumerate((2, 3, 4)):
            for lag in (1, 2, 3):
                expected[row, (lag - 1) * 2] = Pi(params, lag, i, 3)
                expected[row, (lag - 1) * 2 + 1] = Pi(params, lag, i, 4)
        # lag identities: x_3 and x_q shift one group down, x_2 has no source
        expected[4, 0] = expected[5, 1] = 1.0
        expected[7, 2] = expected[8, 3] = 1.0
        expected[10, 4] = expected[11, 5] = 1.0
        assert_array_equal(T, expected)

    def test_D(self, setup, idx):
        params, _ = setup
        D = build_adaptive_D(params, idx)
        expected = np.zeros((12, 6))
        for row, i in enumerate((2, 3, 4)):
            for j in (1, 2):
                for lag in (1, 2, 3):
                    expected[row, (j - 1) * 3 + lag - 1] = Pi(params, lag, i, j)
        # variable 2 was observed at t-1: its lags come from the data
        expected[3, 3] = expected[6, 4] = expected[9, 5] = 1.0
        assert_array_equal(D, expected)

    def test_Z(self, setup, idx):
        params, agg = setup
        Z = build_adaptive_Z(params, agg, idx, np.array([], dtype=int))
        assert Z.shape == (1, 12)
        # variable 2 is newly latent: those columns are zero in every group
        assert_array_equal(Z[:, [0, 3, 6, 9]], np.zeros((1, 4)))
        condensed = Z[:, [1, 2, 4, 5, 7, 8, 10, 11]]
        expected = np.zeros((1, 8))
        for lag in (1, 2, 3):
            expected[0, lag * 2] = Pi(params, lag, 1, 3)
            expected[0, lag * 2 + 1] = Pi(params, lag, 1, 4)
        assert_array_equal(condensed, expected)

    def test_C(self, setup, idx):
        params, _ = setup
        C = build_adaptive_C(params, idx, np.array([], dtype=int))
        expected = np.zeros((1, 6))
        for j in (1, 2):
            for lag in (1, 2, 3):
                expected[0, (j - 1) * 3 + lag - 1] = Pi(params, lag, 1, j)
        assert_array_equal(C, expected)

    def test_G_and_H(self, setup, idx):
        params, _ = setup
        W = params.chol(0)
        G = build_adaptive_G(params, idx, np.array([], dtype=int), 0)
        assert_array_equal(G, W[:1])
        H = build_adaptive_H(params, idx, 0)
        expected = np.zeros((12, 4))
        expected[:3] = W[1:]
        assert_array_equal(H, expected)


class TestCompactAndCompanion:
    def test_compact_rejected_past_boundary(self, setup):
        params, agg = setup
        obs = np.ones((6, 3), dtype=bool)
        obs[5, 2] = False
        pattern = ObservationPattern(6, 5, obs, np.ones((6, 1), dtype=bool))
        with pytest.raises(FormulationError):
            build_compact_system(params, agg, pattern, 5)
        mats = build_compact_system(params, agg, pattern, 2)
        assert mats.T.shape == (4, 4)

    def test_companion_observation_rows(self, setup):
        params, agg = setup
        obs = np.ones((4, 3), dtype=bool)
        obs[3, 1:] = False
        pattern = ObservationPattern(4, 3, obs, np.ones((4, 1), dtype=bool))
        comp = build_companion_system(params, agg, pattern, 3)
        assert comp.transition.shape == (16, 16)
        Z = comp.Z
        assert Z.shape == (2, 16)
        expected = np.zeros((2, 16))
        expected[0, 0] = 1.0
        for lag in range(3):
            expected[1, lag * 4 + 3] = 1.0 / 3.0
        assert_array_equal(Z, expected)

    def test_zero_coefficients(self, setup):
        _, agg = setup
        params = random_params(3, 1, 3, seed=12)
        zeroed = type(params)(3, 1, 3, params.intercept, np.zeros((3, 4, 4)), params.chol(0))
        idx = balanced_index(3, 1)
        Z = build_adaptive_Z(zeroed, agg, idx, np.array([], dtype=int))
        assert_array_equal(Z, np.zeros((3, 4)))


class TestExogVector:
    def test_variable_major_lag_order(self):
        y = np.arange(12.0).reshape(4, 3)
        out = exog_vector(y, np.array([0, 2]), 3, 2)
        # variable 0 at t-1, t-2 then variable 2 at t-1, t-2
        assert_array_equal(out, [y[2, 0], y[1, 0], y[2, 2], y[1, 2]])

    def test_presample_lags_are_zero(self):
        y = np.arange(6.0).reshape(2, 3) + 1.0
        out = exog_vector(y, np.array([1]), 1, 3)
        assert_array_equal(out, [y[0, 1], 0.0, 0.0])
