"""Reference smoother: reduced filtering for the balanced sample, a switch
to the full stacked (companion) formulation over the ragged edge, and a
switch back for the final smoothing pass.

The companion segment deliberately uses dense full-dimension products; the
other backends exist to avoid exactly that cost.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .kalman import (
    FilterRecord,
    FilterState,
    init_state,
    quarterly_state_index,
    run_filter,
    run_smoother,
)
from .model import Aggregation, AggregationScheme, MixedFreqData, VarParams, build_aggregation
from .systems import (
    PeriodSystem,
    SystemMatrices,
    balanced_index,
    build_companion_system,
    build_periods,
    build_system_matrices,
    exog_vector,
)

__all__ = ["RunStats", "SmoothResult", "run_baseline", "compact_to_companion", "companion_to_compact"]


@dataclass
class RunStats:
    """Step counters used to verify which formulations a run touched."""

    compact_steps: int = 0
    companion_steps: int = 0
    adaptive_steps: int = 0


@dataclass
class SmoothResult:
    x_hat: np.ndarray                     # (T, n) smoothed latent matrix
    stats: RunStats
    records: list[FilterRecord] = field(default=None, repr=False)  # type: ignore[assignment]


def prepare(params: VarParams, agg: Aggregation | AggregationScheme) -> Aggregation:
    if isinstance(agg, AggregationScheme):
        # reuse one expansion per scheme so repeated draws share cached
        # period structures downstream
        dims = (params.n_m, params.n_q, params.p)
        cached = getattr(agg, "_expanded", None)
        if cached is not None and cached[0] == dims:
            return cached[1]
        expanded = build_aggregation(agg, *dims)
        object.__setattr__(agg, "_expanded", (dims, expanded))
        return expanded
    if (agg.n_m, agg.n_q, agg.p) != (params.n_m, params.n_q, params.p):
        raise ConfigurationError("aggregation dimensions do not match the VAR parameters")
    return agg


def check_pattern(params: VarParams, data: MixedFreqData) -> None:
    if data.pattern.t_balanced < params.p + 1:
        raise ConfigurationError(
            f"need at least p+1={params.p + 1} balanced leading periods, "
            f"found {data.pattern.t_balanced}"
        )


def fill_states(x: np.ndarray, states: list[np.ndarray], periods: list[PeriodSystem], n_m: int) -> None:
    """Write each period's smoothed head (latent monthly and quarterly) into x."""
    for per, a in zip(periods, states):
        idx = per.mats.idx
        k = len(idx.u_t)
        x[per.t, idx.u_t] = a[:k]
        x[per.t, n_m:] = a[k : idx.head_size]


def fill_observed(x: np.ndarray, data: MixedFreqData) -> None:
    mask = ~np.isnan(data.values[:, : data.n_m])
    x[:, : data.n_m][mask] = data.values[:, : data.n_m][mask]


def smooth_balanced(
    params: VarParams,
    agg: Aggregation,
    data: MixedFreqData,
    init: FilterState,
) -> SmoothResult:
    """Reduced-form filtering and smoothing over a fully balanced sample.

    This is the single code path all backends share when there is no ragged
    edge.
    """
    periods = build_periods(params, agg, data)
    res = run_filter(periods, init)
    states, _ = run_smoother(res.records)
    x = np.empty((data.T, params.n))
    fill_states(x, states, periods, params.n_m)
    fill_observed(x, data)
    stats = RunStats(compact_steps=len(periods))
    return SmoothResult(x, stats, res.records)


def compact_to_companion(
    state: FilterState,
    params: VarParams,
    data: MixedFreqData,
    t_enter: int,
) -> FilterState:
    """Lift the filtered reduced state at t_enter-1 and predict into t_enter.

    Known monthly values enter with zero variance interleaved with the
    quarterly filtered moments, then one stacked-form prediction step.
    """
    n, p = params.n, params.p
    dim = n * (p + 1)
    a_tilde = np.zeros(dim)
    P_tilde = np.zeros((dim, dim))
    qi = quarterly_state_index(params)
    for lag in range(p + 1):
        a_tilde[lag * n : lag * n + params.n_m] = data.values[t_enter - 1 - lag, : params.n_m]
    a_tilde[qi] = state.a
    P_tilde[np.ix_(qi, qi)] = state.P
    F1 = params.companion_transition()
    a = F1 @ a_tilde + params.companion_intercept()
    P = F1 @ P_tilde @ F1.T + params.companion_noise_cov(t_enter)
    return FilterState(a, (P + P.T) / 2.0)


def companion_to_compact(
    alpha_hat: np.ndarray,
    pred: FilterState,
    params: VarParams,
) -> np.ndarray:
    """Adjoint vector r that restarts the reduced smoothing recursion.

    ``alpha_hat`` is the smoothed stacked state at the first ragged period;
    ``pred`` the reduced one-step prediction for the same period.  Solves
    P r = (alpha_hat_q - a); a semidefinite P (exactly observed components)
    falls back to the pseudo-inverse, which is exact because the residual
    is zero on the deterministic directions.
    """
    qi = quarterly_state_index(params)
    diff = alpha_hat[qi] - pred.a
    P = pred.P
    try:
        c, low = np.linalg.cholesky(P), True
    except np.linalg.LinAlgError:
        c = None
    if c is not None:
        d = np.diag(c)
        if d.min() > 0 and (d.max() / d.min()) ** 2 < 1e12:
            from scipy.linalg import cho_solve

            return cho_solve((c, True), diff)
    warnings.warn(
        "reduced prediction covariance singular at the balanced boundary; "
        "using a pseudo-inverse on its support"
    )
    return np.linalg.pinv(P, hermitian=True) @ diff


def _boundary_transition(
    params: VarParams, agg: Aggregation, data: MixedFreqData
) -> tuple[np.ndarray, np.ndarray, np.ndarray, SystemMatrices]:
    """Reduced-form transition into the first ragged period (as if balanced)."""
    t_b = data.pattern.t_balanced
    idx = balanced_index(params.n_m, params.n_q)
    mats = build_system_matrices(params, agg, idx, data.pattern.quarterly_rows(t_b), t_b)
    ex = exog_vector(data.monthly(), idx.o_prev, t_b, params.p)
    d = mats.d0 + mats.D @ ex
    return mats.T, d, mats.HHt, mats


def companion_periods(
    params: VarParams, agg: Aggregation, data: MixedFreqData, start: int
) -> list[PeriodSystem]:
    periods = []
    pattern = data.pattern
    for t in range(start, pattern.T):
        comp = build_companion_system(params, agg, pattern, t)
        mats = SystemMatrices(
            Z=comp.Z,
            C=np.zeros((comp.Z.shape[0], 0)),
            G=np.zeros((comp.Z.shape[0], params.n)),
            T=comp.transition,
            D=np.zeros((comp.transition.shape[0], 0)),
            H=comp.noise_chol,
            c0=np.zeros(comp.Z.shape[0]),
            d0=comp.intercept,
        )
        o_t = pattern.observed(t)
        y = np.concatenate([data.values[t, o_t], data.values[t, params.n_m + pattern.quarterly_rows(t)]])
        periods.append(PeriodSystem(mats, mats.c0, comp.intercept, y, t))
    return periods


def run_baseline(
    params: VarParams,
    agg: Aggregation | AggregationScheme,
    data: MixedFreqData,
    init_mode: str = "stationary",
    kappa: float = 1e4,
) -> SmoothResult:
    """Reduced filtering to the balanced boundary, stacked-form filtering and
    smoothing over the ragged edge, then reduced smoothing back to t=1."""
    agg = prepare(params, agg)
    check_pattern(params, data)
    init = init_state(params, init_mode, kappa)
    if data.pattern.balanced:
        return smooth_balanced(params, agg, data, init)

    t_b = data.pattern.t_balanced
    periods = build_periods(params, agg, data, stop=t_b)
    Tm, d, HHt, _ = _boundary_transition(params, agg, data)
    res = run_filter(periods, init, final_transition=(Tm, d, HHt))

    last = res.records[-1]
    lifted = compact_to_companion(FilterState(last.a_filt, last.P_filt), params, data, t_b)
    edge = companion_periods(params, agg, data, t_b)
    res2 = run_filter(edge, lifted, first_is_predicted=True)
    states2, _ = run_smoother(res2.records)

    r_tb = companion_to_compact(states2[0], res.final_pred, params)
    states1, _ = run_smoother(res.records, r_init=r_tb)

    x = np.empty((data.T, params.n))
    fill_states(x, states1, periods, params.n_m)
    n = params.n
    for per, a in zip(edge, states2):
        x[per.t] = a[:n]
    fill_observed(x, data)
    stats = RunStats(compact_steps=len(periods), companion_steps=len(edge))
    return SmoothResult(x, stats, res.records + res2.records)
