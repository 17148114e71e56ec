"""Synthetic instance generation: random stable VARs, latent paths, and the
ragged-edge missingness recipes used by the benchmark experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .kalman import init_state
from .model import (
    AggregationScheme,
    MixedFreqData,
    VarParams,
    intra_quarterly_average,
)
from .simsmooth import simulate_path

__all__ = [
    "random_stable_params",
    "missing_both_count",
    "benchmark_pattern",
    "make_instance",
    "Instance",
]


def random_stable_params(
    n_m: int,
    n_q: int,
    p: int,
    rng: np.random.Generator,
    spectral_bound: float = 0.95,
    coef_scale: float = 0.4,
) -> VarParams:
    """Random VAR rescaled lag-wise until the companion spectral radius is
    below the bound."""
    n = n_m + n_q
    lag_coeffs = rng.normal(scale=coef_scale / math.sqrt(n * p), size=(p, n, n))
    intercept = rng.normal(scale=0.1, size=n)
    B = rng.normal(scale=0.2 / math.sqrt(n), size=(n, n))
    sigma = B @ B.T + 0.5 * np.eye(n)
    chol = np.linalg.cholesky(sigma)
    params = VarParams(n_m, n_q, p, intercept, lag_coeffs, chol)
    radius = np.abs(np.linalg.eigvals(params.companion_transition(p))).max()
    if radius >= spectral_bound:
        scale = spectral_bound / radius * 0.98
        lag_coeffs = lag_coeffs * scale ** np.arange(1, p + 1)[:, None, None]
        params = VarParams(n_m, n_q, p, intercept, lag_coeffs, chol)
    return params


def missing_both_count(n: int, recipe: str = "bracket") -> int:
    """How many monthly variables are missing over the whole ragged edge.

    ``bracket`` is the benchmark default (1 up to n=40, 2 up to 80, 3 above);
    ``fraction`` uses ceil(0.025 n).
    """
    if recipe == "fraction":
        return math.ceil(0.025 * n)
    if recipe != "bracket":
        raise ConfigurationError(f"unknown missingness recipe {recipe!r}")
    if n <= 40:
        return 1
    if n <= 80:
        return 2
    return 3


def benchmark_pattern(
    n_m: int,
    n_q: int,
    T: int,
    t_balanced: int,
    recipe: str = "bracket",
    calendar_offset: int = 0,
) -> np.ndarray:
    """Boolean (T, n) observation mask for the benchmark design.

    The last T - t_balanced periods form the ragged edge: a few monthly
    variables are missing throughout it, the fully observed share is
    ceil(0.3 n), the rest are missing in the final period only.  Quarterly
    values appear at every third month.
    """
    n = n_m + n_q
    k_both = missing_both_count(n, recipe)
    k_full = math.ceil(0.3 * n)
    if k_both + k_full > n_m:
        raise ConfigurationError(
            f"missingness recipe needs {k_both + k_full} monthly variables, have {n_m}"
        )
    mask = np.zeros((T, n), dtype=bool)
    mask[:, :n_m] = True
    if t_balanced < T:
        # edge except the last period: only the always-missing block is out
        mask[t_balanced:, n_m - k_both :] = False
        mask[T - 1, k_full:n_m] = False
    months = np.arange(1, T + 1)
    q_obs = (months - calendar_offset) % 3 == 0
    mask[:, n_m:] = q_obs[:, None]
    return mask


@dataclass(frozen=True)
class Instance:
    params: VarParams
    scheme: AggregationScheme
    data: MixedFreqData
    x_true: np.ndarray


def make_instance(
    n_m: int,
    n_q: int,
    p: int,
    T: int,
    t_balanced: int,
    rng: np.random.Generator,
    scheme: AggregationScheme | None = None,
    recipe: str = "bracket",
    mask: np.ndarray | None = None,
    init_mode: str = "stationary",
    kappa: float = 1e4,
) -> Instance:
    """Random parameters, a simulated latent path, and masked observations."""
    scheme = scheme or intra_quarterly_average()
    params = random_stable_params(n_m, n_q, p, rng)
    if mask is None:
        mask = benchmark_pattern(n_m, n_q, T, t_balanced, recipe)
    shape_data = MixedFreqData(
        np.where(mask, 0.0, np.nan), n_m, n_q,
        pattern=_mask_pattern(mask, n_m, t_balanced_hint=t_balanced),
    )
    init = init_state(params, init_mode, kappa)
    sim = simulate_path(params, shape_data, rng, init, centered=False, scheme=scheme)
    values = np.full((T, n_m + n_q), np.nan)
    values[:, :n_m] = np.where(mask[:, :n_m], sim.x_plus[:, :n_m], np.nan)
    # quarterly observations aggregate the simulated latent path
    values[:, n_m:] = sim.y_plus[:, n_m:]
    data = MixedFreqData.from_values(values, n_m, n_q, min_balanced=p + 1)
    return Instance(params, scheme, data, sim.x_plus)


def _mask_pattern(mask: np.ndarray, n_m: int, t_balanced_hint: int):
    from .model import ObservationPattern

    T = mask.shape[0]
    obs_m = mask[:, :n_m]
    full = obs_m.all(axis=1)
    t_b = int(np.argmin(full)) if not full.all() else T
    return ObservationPattern(T, t_b, obs_m, mask[:, n_m:])
