"""Model primitives: VAR parameters, aggregation schemes, observation patterns.

Conventions used throughout the package:

* variables are ordered monthly-first: columns ``0..n_m-1`` are monthly,
  ``n_m..n-1`` are quarterly;
* stacked state vectors are variable-major within each lag, lags ascending,
  i.e. ``(x_t', x_{t-1}', ...)'``;
* exogenous (observed monthly) regressor vectors are variable-major with the
  lags ``t-1..t-p`` ascending inside each variable block;
* time indices are 0-based internally; ``t_balanced`` counts the leading
  fully-observed monthly periods, so rows ``0..t_balanced-1`` are balanced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsupportedPatternError

__all__ = [
    "VarParams",
    "AggregationScheme",
    "Aggregation",
    "ObservationPattern",
    "MixedFreqData",
    "build_aggregation",
    "detect_pattern",
    "intra_quarterly_average",
]


@dataclass(frozen=True)
class VarParams:
    """Parameters of a monthly-frequency VAR(p) with mixed-frequency observation.

    Attributes
    ----------
    n_m, n_q : int
        Number of monthly and quarterly variables.
    p : int
        Lag order.
    intercept : (n,) array
    lag_coeffs : (p, n, n) array
        One coefficient matrix per lag, lag 1 first.
    chol_cov : (n, n) or (T, n, n) array
        Lower-triangular Cholesky factor(s) of the error covariance.  A single
        matrix is replicated logically over time, never materialized per t.
    """

    n_m: int
    n_q: int
    p: int
    intercept: np.ndarray
    lag_coeffs: np.ndarray
    chol_cov: np.ndarray

    def __post_init__(self):
        n = self.n_m + self.n_q
        intercept = np.asarray(self.intercept, dtype=float).reshape(n)
        lag_coeffs = np.asarray(self.lag_coeffs, dtype=float)
        chol_cov = np.asarray(self.chol_cov, dtype=float)
        if lag_coeffs.shape != (self.p, n, n):
            raise ConfigurationError(
                f"lag_coeffs shape {lag_coeffs.shape} != {(self.p, n, n)}"
            )
        if chol_cov.ndim == 2:
            chol_cov = chol_cov[None, :, :]
        if chol_cov.shape[1:] != (n, n):
            raise ConfigurationError(f"chol_cov trailing dims must be {(n, n)}")
        for W in chol_cov:
            if not np.allclose(W, np.tril(W)):
                raise ConfigurationError("chol_cov factors must be lower-triangular")
            if np.any(np.diag(W) <= 0):
                raise ConfigurationError(
                    "chol_cov factors need strictly positive diagonals"
                )
        object.__setattr__(self, "intercept", intercept)
        object.__setattr__(self, "lag_coeffs", lag_coeffs)
        object.__setattr__(self, "chol_cov", chol_cov)

    @property
    def n(self) -> int:
        return self.n_m + self.n_q

    @property
    def time_varying_cov(self) -> bool:
        return self.chol_cov.shape[0] > 1

    def chol(self, t: int) -> np.ndarray:
        """Lower-triangular factor W_t (0-based t)."""
        if self.chol_cov.shape[0] == 1:
            return self.chol_cov[0]
        return self.chol_cov[t]

    def sigma(self, t: int) -> np.ndarray:
        W = self.chol(t)
        return W @ W.T

    @property
    def coeff_row(self) -> np.ndarray:
        """(n, n*p) horizontal stack (lag-coefficients, lag-major)."""
        return np.concatenate(list(self.lag_coeffs), axis=1)

    def companion_transition(self, n_lags: int | None = None) -> np.ndarray:
        """Companion transition with ``n_lags`` lag groups (default p+1).

        Rows below the coefficient block carry the shift structure
        ``(I | 0)``.
        """
        n = self.n
        k = self.p + 1 if n_lags is None else n_lags
        if k < self.p:
            raise ConfigurationError("companion form needs at least p lag groups")
        F = np.zeros((n * k, n * k))
        F[:n, : n * self.p] = self.coeff_row
        idx = np.arange(n * (k - 1))
        F[n + idx, idx] = 1.0
        return F

    def companion_intercept(self, n_lags: int | None = None) -> np.ndarray:
        k = self.p + 1 if n_lags is None else n_lags
        out = np.zeros(self.n * k)
        out[: self.n] = self.intercept
        return out

    def companion_noise_cov(self, t: int, n_lags: int | None = None) -> np.ndarray:
        """State-noise covariance, zero outside its upper-left n x n block."""
        k = self.p + 1 if n_lags is None else n_lags
        out = np.zeros((self.n * k, self.n * k))
        out[: self.n, : self.n] = self.sigma(t)
        return out

    def unconditional_mean(self) -> np.ndarray:
        A = np.eye(self.n) - self.lag_coeffs.sum(axis=0)
        return np.linalg.solve(A, self.intercept)


@dataclass(frozen=True)
class AggregationScheme:
    """How observed quarterly values aggregate the latent monthly series.

    ``kind`` is ``"intra_quarterly_average"`` or ``"custom"``; ``weights`` has
    one entry per included high-frequency lag (lag 0 first).
    """

    kind: str
    weights: np.ndarray
    p_q: int

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.p_q < 1 or weights.shape[0] != self.p_q:
            raise ConfigurationError("weights length must equal p_q >= 1")
        if self.kind == "intra_quarterly_average":
            if self.p_q != 3 or not np.allclose(weights, 1.0 / 3.0):
                raise ConfigurationError(
                    "intra_quarterly_average requires p_q=3 and weights 1/3"
                )
        elif self.kind != "custom":
            raise ConfigurationError(f"unknown aggregation kind {self.kind!r}")
        object.__setattr__(self, "weights", weights)


def intra_quarterly_average() -> AggregationScheme:
    return AggregationScheme("intra_quarterly_average", np.full(3, 1.0 / 3.0), 3)


def skip_sampling() -> AggregationScheme:
    """Quarterly value equals the quarter-end monthly latent value."""
    return AggregationScheme("custom", np.ones(1), 1)


@dataclass(frozen=True)
class Aggregation:
    """Expanded aggregation matrices for a given (n_m, n_q, p)."""

    scheme: AggregationScheme
    n_m: int
    n_q: int
    p: int
    lam: np.ndarray       # n x p*n, full aggregation matrix on z_t
    lam_q: np.ndarray     # n_q x p*n, its quarterly rows
    lam_qq: np.ndarray    # n_q x n_q*p_q, zero columns removed

    @property
    def p_q(self) -> int:
        return self.scheme.p_q

    @property
    def weights(self) -> np.ndarray:
        return self.scheme.weights

    def quarterly_state_cols(self, n_state_group: int, offset: int) -> np.ndarray:
        """Columns of the nonzero quarterly entries inside a stacked state.

        The state is assumed to consist of lag groups of size
        ``n_state_group`` whose quarterly variables sit at
        ``offset..offset+n_q-1`` within each group; returns the columns of
        lags ``0..p_q-1`` in lag-major order, matching ``lam_qq``'s columns.
        """
        lags = np.repeat(np.arange(self.p_q), self.n_q)
        vars_ = np.tile(np.arange(self.n_q), self.p_q)
        return lags * n_state_group + offset + vars_


def build_aggregation(scheme: AggregationScheme, n_m: int, n_q: int, p: int) -> Aggregation:
    """Expand an aggregation scheme to its (lam, lam_q, lam_qq) matrices."""
    if p < scheme.p_q:
        raise ConfigurationError(
            f"lag order p={p} must be >= aggregation lag count p_q={scheme.p_q}"
        )
    n = n_m + n_q
    lam = np.zeros((n, p * n))
    lam[:n_m, :n_m] = np.eye(n_m)
    for lag, w in enumerate(scheme.weights):
        for j in range(n_q):
            lam[n_m + j, lag * n + n_m + j] = w
    lam_q = lam[n_m:, :]
    lam_qq = np.zeros((n_q, n_q * scheme.p_q))
    for lag, w in enumerate(scheme.weights):
        lam_qq[:, lag * n_q : (lag + 1) * n_q] = w * np.eye(n_q)
    return Aggregation(scheme, n_m, n_q, p, lam, lam_q, lam_qq)


@dataclass(frozen=True)
class ObservationPattern:
    """Per-period monthly observation sets and quarterly observation flags."""

    T: int
    t_balanced: int                 # count of leading balanced periods (T_b)
    observed_monthly: np.ndarray    # (T, n_m) bool
    quarterly_observed: np.ndarray  # (T, n_q) bool

    @property
    def n_m(self) -> int:
        return self.observed_monthly.shape[1]

    @property
    def n_q(self) -> int:
        return self.quarterly_observed.shape[1]

    def observed(self, t: int) -> np.ndarray:
        """O_t: indices of monthly variables observed at 0-based period t."""
        return np.flatnonzero(self.observed_monthly[t])

    def unobserved(self, t: int) -> np.ndarray:
        """U_t: indices of monthly variables unobserved at 0-based period t."""
        return np.flatnonzero(~self.observed_monthly[t])

    def quarterly_rows(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.quarterly_observed[t])

    @property
    def balanced(self) -> bool:
        return self.t_balanced == self.T


@dataclass(frozen=True)
class MixedFreqData:
    """Dense observation matrix with NaN missing markers plus its pattern."""

    values: np.ndarray  # (T, n) float, NaN where missing
    n_m: int
    n_q: int
    pattern: ObservationPattern = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.pattern is None:
            raise ConfigurationError("use MixedFreqData.from_values to build data")

    @classmethod
    def from_values(cls, values: np.ndarray, n_m: int, n_q: int, min_balanced: int = 1) -> "MixedFreqData":
        values = np.asarray(values, dtype=float)
        pattern = detect_pattern(values, n_m, n_q, min_balanced=min_balanced)
        return cls(values, n_m, n_q, pattern)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.n_m + self.n_q

    def monthly(self) -> np.ndarray:
        return self.values[:, : self.n_m]

    def quarterly(self) -> np.ndarray:
        return self.values[:, self.n_m :]

    def replace_values(self, values: np.ndarray) -> "MixedFreqData":
        """Same pattern, new values (used for the centered pseudo-observations).

        The new matrix must be missing exactly where the original is.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape:
            raise ConfigurationError("replacement values must match data shape")
        return MixedFreqData(values, self.n_m, self.n_q, self.pattern)


def detect_pattern(values: np.ndarray, n_m: int, n_q: int, min_balanced: int = 1) -> ObservationPattern:
    """Derive the observation pattern of a data matrix.

    ``t_balanced`` is maximal; the ragged edge must be monotone
    (``U_{t-1} subset of U_t``) and at least ``min_balanced`` leading periods
    must be fully observed in the monthly block.
    """
    values = np.asarray(values, dtype=float)
    T, n = values.shape
    if n != n_m + n_q:
        raise ConfigurationError(f"data has {n} columns, expected {n_m + n_q}")
    obs_m = ~np.isnan(values[:, :n_m])
    obs_q = ~np.isnan(values[:, n_m:])
    full = obs_m.all(axis=1)
    t_balanced = int(np.argmin(full)) if not full.all() else T
    if t_balanced < min_balanced:
        raise ConfigurationError(
            f"only {t_balanced} leading fully observed monthly periods, "
            f"need at least {min_balanced}"
        )
    for t in range(t_balanced + 1, T):
        prev_unobs = ~obs_m[t - 1]
        now_unobs = ~obs_m[t]
        if np.any(prev_unobs & ~now_unobs):
            bad = np.flatnonzero(prev_unobs & ~now_unobs)
            raise UnsupportedPatternError(
                f"non-monotone ragged edge: monthly variable(s) {bad.tolist()} "
                f"unobserved at t={t - 1} but observed at t={t}"
            )
    return ObservationPattern(T, t_balanced, obs_m, obs_q)
