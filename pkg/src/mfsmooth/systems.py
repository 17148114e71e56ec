"""Per-period state-space system construction.

One general builder covers the reduced (quarterly-stack) formulation and its
ragged-edge extension in which the state is augmented, period by period, with
exactly the currently-unobserved monthly variables.  The balanced case is the
special case ``U_t = {}``.  The full stacked (companion) formulation used by
the reference smoother is built separately.

State layout: ``p+1`` lag groups, each group ``(x_{U_t}, x_q)`` with the
unobserved monthly indices ascending and the quarterly variables last.
Exogenous regressors are the observed monthly series, variable-major with
lags ``t-1..t-p`` inside each variable block.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormulationError
from .model import Aggregation, MixedFreqData, ObservationPattern, VarParams

__all__ = [
    "AdaptiveIndex",
    "SystemMatrices",
    "PeriodSystem",
    "CompanionSystem",
    "build_adaptive_T",
    "build_adaptive_D",
    "build_adaptive_Z",
    "build_adaptive_C",
    "build_adaptive_G",
    "build_adaptive_H",
    "build_system_matrices",
    "build_compact_system",
    "build_companion_system",
    "companion_observation",
    "exog_vector",
    "build_periods",
    "balanced_index",
]


@dataclass(frozen=True)
class AdaptiveIndex:
    """Index sets driving one period's system matrices.

    ``u_t``/``o_t`` partition the monthly variables at period t;
    ``u_prev``/``o_prev`` at period t-1.  A monotone edge requires
    ``u_prev`` to be a subset of ``u_t``.
    """

    u_t: np.ndarray
    o_t: np.ndarray
    u_prev: np.ndarray
    o_prev: np.ndarray
    n_m: int
    n_q: int

    def __post_init__(self):
        for name in ("u_t", "o_t", "u_prev", "o_prev"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))
        if not set(self.u_prev) <= set(self.u_t):
            raise ConfigurationError("non-monotone index sets: u_prev must be within u_t")
        if sorted(set(self.u_t) | set(self.o_t)) != list(range(self.n_m)):
            raise ConfigurationError("u_t and o_t must partition the monthly indices")

    @property
    def head_size(self) -> int:
        """|U_t| + n_q, the size of one current-state lag group."""
        return len(self.u_t) + self.n_q

    @property
    def prev_head_size(self) -> int:
        return len(self.u_prev) + self.n_q

    def head_vars(self) -> np.ndarray:
        """Global variable indices of one current lag group."""
        return np.concatenate([self.u_t, self.n_m + np.arange(self.n_q)])

    def prev_head_vars(self) -> np.ndarray:
        return np.concatenate([self.u_prev, self.n_m + np.arange(self.n_q)])

    def selection(self) -> np.ndarray:
        """J_t: identity columns, those for U_t intersected with O_{t-1} deleted."""
        s, sp = self.head_size, self.prev_head_size
        J = np.zeros((s, sp))
        head = self.head_vars()
        pos = {v: i for i, v in enumerate(head)}
        for j, v in enumerate(self.prev_head_vars()):
            J[pos[v], j] = 1.0
        return J

    def selection_complement(self) -> np.ndarray:
        """J_perp_t: the deleted identity columns (newly latent variables)."""
        s = self.head_size
        head = self.head_vars()
        newly = [i for i, v in enumerate(head) if v in set(self.u_t) & set(self.o_prev)]
        Jp = np.zeros((s, len(newly)))
        for j, i in enumerate(newly):
            Jp[i, j] = 1.0
        return Jp


def balanced_index(n_m: int, n_q: int) -> AdaptiveIndex:
    all_m = np.arange(n_m)
    empty = np.empty(0, dtype=int)
    return AdaptiveIndex(empty, all_m, empty, all_m, n_m, n_q)


def build_adaptive_T(params: VarParams, idx: AdaptiveIndex) -> np.ndarray:
    """Transition mapping the t-1 state onto the (possibly larger) t state.

    Top rows carry lag coefficients restricted to the latent columns; the
    lower block places each still-tracked component one lag group down
    (the Kronecker selection structure, filled by copying).
    """
    p = params.p
    s, sp = idx.head_size, idx.prev_head_size
    T = np.zeros(((p + 1) * s, (p + 1) * sp))
    rows = idx.head_vars()
    cols = idx.prev_head_vars()
    for lag in range(1, p + 1):
        T[:s, (lag - 1) * sp : lag * sp] = params.lag_coeffs[lag - 1][np.ix_(rows, cols)]
    J = idx.selection()
    for lag in range(1, p + 1):
        T[lag * s : (lag + 1) * s, (lag - 1) * sp : lag * sp] = J
    return T


def _exog_col(pos: int, lag: int, p: int) -> int:
    # variable-major layout: block of p lags per observed variable
    return pos * p + (lag - 1)


def build_adaptive_D(params: VarParams, idx: AdaptiveIndex) -> np.ndarray:
    """Loadings of the state equation on lagged observed monthly data.

    The lower rows are the lag identities of variables observed at t-1 but
    unobserved at t (the orthogonal-complement routing).
    """
    p = params.p
    s = idx.head_size
    n_ex = p * len(idx.o_prev)
    D = np.zeros(((p + 1) * s, n_ex))
    rows = idx.head_vars()
    for lag in range(1, p + 1):
        cols = np.array([_exog_col(i, lag, p) for i in range(len(idx.o_prev))], dtype=int)
        if cols.size:
            D[:s, cols] = params.lag_coeffs[lag - 1][np.ix_(rows, idx.o_prev)]
    newly = set(idx.u_t) & set(idx.o_prev)
    head_pos = {v: i for i, v in enumerate(rows)}
    o_prev_pos = {v: i for i, v in enumerate(idx.o_prev)}
    for v in sorted(newly):
        for lag in range(1, p + 1):
            D[lag * s + head_pos[v], _exog_col(o_prev_pos[v], lag, p)] = 1.0
    return D


def build_adaptive_Z(
    params: VarParams, agg: Aggregation, idx: AdaptiveIndex, q_rows: np.ndarray
) -> np.ndarray:
    """Observation loading on the current stacked state.

    Monthly rows load lag coefficients only on components latent since t-1
    (observed lags arrive through the exogenous block instead); quarterly
    rows place the aggregation weights on the quarterly positions of lag
    groups ``0..p_q-1``.
    """
    p = params.p
    s = idx.head_size
    n_obs = len(idx.o_t) + len(q_rows)
    Z = np.zeros((n_obs, (p + 1) * s))
    latent = idx.prev_head_vars()  # lagged-latent columns: U_{t-1} and quarterly
    head_pos = {v: i for i, v in enumerate(idx.head_vars())}
    latent_pos = np.array([head_pos[v] for v in latent], dtype=int)
    for lag in range(1, p + 1):
        if latent_pos.size and len(idx.o_t):
            Z[: len(idx.o_t), lag * s + latent_pos] = params.lag_coeffs[lag - 1][
                np.ix_(idx.o_t, latent)
            ]
    for r, j in enumerate(q_rows):
        for lag in range(agg.p_q):
            Z[len(idx.o_t) + r, lag * s + len(idx.u_t) + j] = agg.weights[lag]
    return Z


def build_adaptive_C(params: VarParams, idx: AdaptiveIndex, q_rows: np.ndarray) -> np.ndarray:
    """Observation loadings on lagged observed monthly data (quarterly rows zero)."""
    p = params.p
    n_ex = p * len(idx.o_prev)
    C = np.zeros((len(idx.o_t) + len(q_rows), n_ex))
    for lag in range(1, p + 1):
        cols = np.array([_exog_col(i, lag, p) for i in range(len(idx.o_prev))], dtype=int)
        if cols.size and len(idx.o_t):
            C[: len(idx.o_t), cols] = params.lag_coeffs[lag - 1][np.ix_(idx.o_t, idx.o_prev)]
    return C


def build_adaptive_G(params: VarParams, idx: AdaptiveIndex, q_rows: np.ndarray, t: int) -> np.ndarray:
    W = params.chol(t)
    G = np.zeros((len(idx.o_t) + len(q_rows), params.n))
    G[: len(idx.o_t)] = W[idx.o_t]
    return G


def build_adaptive_H(params: VarParams, idx: AdaptiveIndex, t: int) -> np.ndarray:
    W = params.chol(t)
    s = idx.head_size
    H = np.zeros(((params.p + 1) * s, params.n))
    H[:s] = W[idx.head_vars()]
    return H


@dataclass
class SystemMatrices:
    """One period's structural matrices plus reusable products.

    ``c0``/``d0`` are the intercept parts; the data-dependent parts come from
    the exogenous regressor vector at each period.
    """

    Z: np.ndarray
    C: np.ndarray
    G: np.ndarray
    T: np.ndarray
    D: np.ndarray
    H: np.ndarray
    c0: np.ndarray
    d0: np.ndarray
    idx: AdaptiveIndex | None = None
    q_rows: np.ndarray | None = None
    GGt: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    GHt: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    HHt: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.GGt is None:
            self.GGt = self.G @ self.G.T
        if self.GHt is None:
            self.GHt = self.G @ self.H.T
        if self.HHt is None:
            self.HHt = self.H @ self.H.T
        # constant part of the innovation covariance, F = Z M + F_const
        self.F_const = self.GGt + self.GHt @ self.Z.T
        # memo for covariance-side filter quantities keyed by the predicted
        # covariance bytes; the covariance recursion is data-independent and
        # cycles, so small-state runs repeat the same factorizations
        self._cov_cache: dict = {}

    @property
    def state_dim(self) -> int:
        return self.T.shape[0]

    @property
    def prev_dim(self) -> int:
        return self.T.shape[1]

    @property
    def n_obs(self) -> int:
        return self.Z.shape[0]


@dataclass
class PeriodSystem:
    """SystemMatrices specialized to one period: constants and observations."""

    mats: SystemMatrices
    c: np.ndarray
    d: np.ndarray
    y: np.ndarray
    t: int


def build_system_matrices(
    params: VarParams,
    agg: Aggregation,
    idx: AdaptiveIndex,
    q_rows: np.ndarray,
    t: int,
) -> SystemMatrices:
    q_rows = np.asarray(q_rows, dtype=int)
    Z = build_adaptive_Z(params, agg, idx, q_rows)
    C = build_adaptive_C(params, idx, q_rows)
    G = build_adaptive_G(params, idx, q_rows, t)
    T = build_adaptive_T(params, idx)
    D = build_adaptive_D(params, idx)
    H = build_adaptive_H(params, idx, t)
    c0 = np.zeros(Z.shape[0])
    c0[: len(idx.o_t)] = params.intercept[idx.o_t]
    d0 = np.zeros(T.shape[0])
    d0[: idx.head_size] = params.intercept[idx.head_vars()]
    return SystemMatrices(Z, C, G, T, D, H, c0, d0, idx=idx, q_rows=q_rows)


def build_compact_system(
    params: VarParams,
    agg: Aggregation,
    pattern: ObservationPattern,
    t: int,
) -> SystemMatrices:
    """Balanced-sample (quarterly-stack) system for 0-based period t <= T_b - 1."""
    if t >= pattern.t_balanced:
        raise FormulationError(
            f"compact formulation only valid in the balanced sample "
            f"(t={t}, balanced periods={pattern.t_balanced})"
        )
    idx = balanced_index(params.n_m, params.n_q)
    return build_system_matrices(params, agg, idx, pattern.quarterly_rows(t), t)


def exog_vector(
    monthly_values: np.ndarray,
    o_prev: np.ndarray,
    t: int,
    p: int,
) -> np.ndarray:
    """Lagged observed monthly data at period t (pre-sample lags are zero)."""
    k = len(o_prev)
    lagged = np.zeros((p, k))
    avail = min(p, t)
    if avail > 0:
        # row l-1 holds the values at t-l
        lagged[:avail] = monthly_values[t - avail : t, :][::-1][:, o_prev]
    return lagged.T.reshape(p * k)


@dataclass(frozen=True)
class CompanionSystem:
    """Full stacked formulation with p+1 lag groups."""

    transition: np.ndarray   # F_1
    intercept: np.ndarray    # F_c
    noise_chol: np.ndarray   # H_t, zero outside the top n x n block
    Z: np.ndarray            # per-period observation loading

    @property
    def noise_cov(self) -> np.ndarray:
        return self.noise_chol @ self.noise_chol.T


def companion_observation(
    params: VarParams,
    agg: Aggregation,
    o_t: np.ndarray,
    q_rows: np.ndarray,
) -> np.ndarray:
    """Observation loading on the stacked state: selection plus aggregation rows."""
    n, p = params.n, params.p
    dim = n * (p + 1)
    Z = np.zeros((len(o_t) + len(q_rows), dim))
    for r, v in enumerate(o_t):
        Z[r, v] = 1.0
    for r, j in enumerate(q_rows):
        for lag in range(agg.p_q):
            Z[len(o_t) + r, lag * n + params.n_m + j] = agg.weights[lag]
    return Z


def build_companion_system(
    params: VarParams,
    agg: Aggregation,
    pattern: ObservationPattern,
    t: int,
) -> CompanionSystem:
    n, p = params.n, params.p
    H = np.zeros((n * (p + 1), n))
    H[:n] = params.chol(t)
    Z = companion_observation(params, agg, pattern.observed(t), pattern.quarterly_rows(t))
    return CompanionSystem(
        transition=params.companion_transition(),
        intercept=params.companion_intercept(),
        noise_chol=H,
        Z=Z,
    )


def _index_for_period(pattern: ObservationPattern, n_m: int, n_q: int, t: int) -> AdaptiveIndex:
    all_m = np.arange(n_m)
    empty = np.empty(0, dtype=int)
    o_t = pattern.observed(t)
    u_t = pattern.unobserved(t)
    if t == 0:
        o_prev, u_prev = all_m, empty
    else:
        o_prev, u_prev = pattern.observed(t - 1), pattern.unobserved(t - 1)
    return AdaptiveIndex(u_t, o_t, u_prev, o_prev, n_m, n_q)


def build_periods(
    params: VarParams,
    agg: Aggregation,
    data: MixedFreqData,
    stop: int | None = None,
) -> list[PeriodSystem]:
    """Periods 0..stop-1 of the adaptive formulation (default: the whole sample).

    Structural matrices are cached across periods with identical index sets
    and quarterly flags, and the per-period skeleton is reused across calls
    that share the same pattern and parameters (every draw of a simulation
    smoother); only the constants and observations vary between draws.
    """
    pattern = data.pattern
    stop = pattern.T if stop is None else stop
    monthly = data.monthly()
    p = params.p
    skeleton = _period_skeleton(params, agg, pattern, stop)

    # group periods sharing structural matrices so the exogenous constants
    # become a handful of matrix products instead of per-period matvecs
    groups: dict[int, tuple[SystemMatrices, list[int]]] = {}
    for t in range(stop):
        mats, _q_rows = skeleton[t]
        groups.setdefault(id(mats), (mats, []))[1].append(t)
    cs: dict[int, np.ndarray] = {}
    ds: dict[int, np.ndarray] = {}
    for key, (mats, ts) in groups.items():
        o_prev = mats.idx.o_prev
        k = len(o_prev)
        t_arr = np.asarray(ts)
        Ex = np.zeros((k, p, len(ts)))
        for lag in range(1, p + 1):
            src = t_arr - lag
            valid = src >= 0
            if valid.any():
                Ex[:, lag - 1, valid] = monthly[src[valid]][:, o_prev].T
        Ex = Ex.reshape(k * p, len(ts))
        cs[key] = mats.c0[:, None] + mats.C @ Ex
        ds[key] = mats.d0[:, None] + mats.D @ Ex
    col = {key: 0 for key in groups}

    periods = []
    values = data.values
    n_m = params.n_m
    for t in range(stop):
        mats, q_rows = skeleton[t]
        key = id(mats)
        i = col[key]
        col[key] = i + 1
        y = np.concatenate([values[t, mats.idx.o_t], values[t, n_m + q_rows]])
        periods.append(PeriodSystem(mats, cs[key][:, i], ds[key][:, i], y, t))
    return periods


def _period_skeleton(
    params: VarParams,
    agg: Aggregation,
    pattern: ObservationPattern,
    stop: int,
) -> list[tuple[SystemMatrices, np.ndarray]]:
    entry = getattr(pattern, "_system_cache", None)
    if (
        entry is not None
        and entry[0]() is params
        and entry[1]() is agg
        and len(entry[2]) >= stop
    ):
        return entry[2]
    cache: dict[tuple, SystemMatrices] = {}
    skeleton: list[tuple[SystemMatrices, np.ndarray]] = []
    for t in range(pattern.T):
        idx = _index_for_period(pattern, params.n_m, params.n_q, t)
        q_rows = pattern.quarterly_rows(t)
        key = (tuple(idx.u_t), tuple(idx.u_prev), tuple(q_rows), params.time_varying_cov and t)
        mats = cache.get(key)
        if mats is None:
            mats = build_system_matrices(params, agg, idx, q_rows, t)
            cache[key] = mats
        skeleton.append((mats, q_rows))
    object.__setattr__(
        pattern, "_system_cache", (weakref.ref(params), weakref.ref(agg), skeleton)
    )
    return skeleton
