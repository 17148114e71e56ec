import numpy as np
import pytest
from numpy.testing import assert_allclose

from mfsmooth import (
    ConfigurationError,
    UnsupportedPatternError,
    VarParams,
    build_aggregation,
    detect_pattern,
    intra_quarterly_average,
    skip_sampling,
)
from mfsmooth.model import AggregationScheme


def random_params(n_m, n_q, p, seed=0, scale=0.2):
    rng = np.random.default_rng(seed)
    n = n_m + n_q
    lags = rng.normal(scale=scale / np.sqrt(n * p), size=(p, n, n))
    B = rng.normal(size=(n, n)) * 0.3
    chol = np.linalg.cholesky(B @ B.T + 0.5 * np.eye(n))
    return VarParams(n_m, n_q, p, rng.normal(size=n) * 0.1, lags, chol)


class TestVarParams:
    def test_rejects_mismatched_lag_shapes(self):
        with pytest.raises(ConfigurationError):
            VarParams(2, 1, 2, np.zeros(3), np.zeros((3, 3, 3)), np.eye(3))

    def test_rejects_non_lower_triangular_chol(self):
        W = np.eye(3)
        W[0, 2] = 0.5
        with pytest.raises(ConfigurationError):
            VarParams(2, 1, 1, np.zeros(3), np.zeros((1, 3, 3)), W)

    def test_companion_shift_structure(self):
        params = random_params(3, 1, 3)
        F = params.companion_transition()
        assert F.shape == (16, 16)
        assert_allclose(F[4:, :12], np.eye(12))
        assert_allclose(F[4:, 12:], 0.0)

    def test_companion_reproduces_var_recursion(self):
        params = random_params(2, 1, 2, seed=3)
        n, p = 3, 2
        rng = np.random.default_rng(5)
        z = rng.normal(size=n * (p + 1))
        F = params.companion_transition()
        Fc = params.companion_intercept()
        path_direct = []
        lags = [z[l * n : (l + 1) * n] for l in range(p + 1)]
        z_comp = z.copy()
        for _ in range(20):
            x = params.intercept + sum(params.lag_coeffs[l] @ lags[l] for l in range(p))
            lags = [x] + lags[:-1]
            path_direct.append(x)
            z_comp = F @ z_comp + Fc
            assert_allclose(z_comp[:n], x, atol=1e-12)

    def test_unconditional_mean_fixed_point(self):
        params = random_params(2, 1, 2, seed=9)
        mu = params.unconditional_mean()
        assert_allclose(params.intercept + sum(P @ mu for P in params.lag_coeffs), mu)


class TestAggregation:
    def test_intra_quarterly_average_row(self):
        agg = build_aggregation(intra_quarterly_average(), 3, 1, 3)
        assert_allclose(agg.lam_qq, np.full((1, 3), 1.0 / 3.0))

    def test_skip_sampling_is_identity(self):
        agg = build_aggregation(skip_sampling(), 2, 2, 2)
        assert_allclose(agg.lam_qq, np.eye(2))

    def test_two_quarterly_expansion(self):
        agg = build_aggregation(intra_quarterly_average(), 2, 2, 4)
        expected = np.zeros((2, 6))
        for i in range(2):
            expected[i, [i, i + 2, i + 4]] = 1.0 / 3.0
        assert_allclose(agg.lam_qq, expected)

    def test_lam_q_matches_condensed_form(self):
        agg = build_aggregation(intra_quarterly_average(), 3, 2, 4)
        nonzero_cols = np.flatnonzero(np.any(agg.lam_q != 0, axis=0))
        assert_allclose(agg.lam_q[:, nonzero_cols], agg.lam_qq)

    def test_aggregating_simulated_path(self):
        # quarterly observation = average of the three latest latent values
        agg = build_aggregation(intra_quarterly_average(), 2, 1, 3)
        rng = np.random.default_rng(1)
        z = rng.normal(size=3 * 3)  # stacked (x_t, x_{t-1}, x_{t-2})
        full = agg.lam @ z
        assert_allclose(full[2], np.mean([z[2], z[5], z[8]]))

    def test_p_below_p_q_rejected(self):
        with pytest.raises(ConfigurationError):
            build_aggregation(intra_quarterly_average(), 2, 1, 2)

    def test_bad_custom_weights(self):
        with pytest.raises(ConfigurationError):
            AggregationScheme("intra_quarterly_average", np.array([0.5, 0.5]), 2)


class TestDetectPattern:
    def test_fully_observed(self):
        values = np.zeros((6, 3))
        pat = detect_pattern(values, 2, 1)
        assert pat.t_balanced == 6
        assert pat.balanced
        assert len(pat.unobserved(5)) == 0

    def test_growing_monotone_edge(self):
        values = np.zeros((8, 4))
        values[6, 2] = np.nan
        values[7, 1] = np.nan
        values[7, 2] = np.nan
        pat = detect_pattern(values, 3, 1)
        assert pat.t_balanced == 6
        assert list(pat.unobserved(6)) == [2]
        assert list(pat.unobserved(7)) == [1, 2]
        assert list(pat.observed(6)) == [0, 1]

    def test_non_monotone_rejected(self):
        values = np.zeros((6, 3))
        values[4, 1] = np.nan  # observed again at t=5
        with pytest.raises(UnsupportedPatternError):
            detect_pattern(values, 3, 0)

    def test_min_balanced_enforced(self):
        values = np.zeros((6, 3))
        values[2:, 1] = np.nan
        with pytest.raises(ConfigurationError):
            detect_pattern(values, 3, 0, min_balanced=4)

    def test_quarterly_gaps_allowed_anywhere(self):
        values = np.zeros((6, 3))
        values[:, 2] = np.nan
        values[2, 2] = 1.0
        pat = detect_pattern(values, 2, 1)
        assert pat.t_balanced == 6
        assert list(pat.quarterly_rows(2)) == [0]
        assert list(pat.quarterly_rows(3)) == []
