"""Validation statistics: KS distance and the Gumbel-normalised support values."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from src.geometry.errors import DomainError
from src.geometry.exactlaw import (
    JansonConstants,
    ModelParams,
    Regime,
    covering_tau,
    gumbel_normalizers_1d,
    gumbel_normalizers_md,
)


def ks_distance(samples, cdf: Callable) -> float:
    """sup |F_n − F| over the sorted sample, both one-sided gaps."""
    values = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = values.shape[0]
    if n == 0:
        raise DomainError("KS distance of an empty sample")
    try:
        model = np.asarray(cdf(values), dtype=float).reshape(-1)
    except TypeError:
        model = np.empty(0)
    if model.shape[0] != n:
        model = np.array([cdf(float(v)) for v in values], dtype=float)
    ranks = np.arange(1, n + 1, dtype=float)
    above = np.max(ranks / n - model)
    below = np.max(model - (ranks - 1.0) / n)
    return float(max(above, below, 0.0))


def gumbel_cdf(t):
    return np.exp(-np.exp(-np.asarray(t, dtype=float)))


def _log_inv_sqrt_one_minus_sq(r: float) -> float:
    if not 0.0 < r < 1.0:
        raise DomainError(f"sample must lie in (0, 1), got {r!r}")
    return -0.5 * math.log1p(-r * r)


def gumbel_statistic_1d(params: ModelParams, regime: Regime, r_sample: float) -> float:
    """d(log(1/√(1−h²)) − L/(d+1)) + log √𝔪(d)."""
    norm = gumbel_normalizers_1d(params, regime)
    return params.d * (_log_inv_sqrt_one_minus_sq(r_sample) - norm.center) + 0.5 * norm.scale_m


def gumbel_statistic_md(
    params: ModelParams, m: int, sf_dm_sample: float, constants: Optional[JansonConstants] = None
) -> float:
    """𝔞(d; m) − 𝔟(d; m)·log(1/√(1 − h_{d,m}²))."""
    norm = gumbel_normalizers_md(params, m, constants)
    return norm.a_frak - norm.b_frak * _log_inv_sqrt_one_minus_sq(sf_dm_sample)


def calibrated_statistic_md(
    params: ModelParams, m: int, sf_dm_sample: float, constants: Optional[JansonConstants] = None
) -> float:
    """τ with a(τ) landing exactly on h_{d,m}: P(statistic ≤ τ) is the covering probability at a(τ).

    Unlike :func:`gumbel_statistic_md` it keeps the second-order terms of the
    a(τ) equation, whose first-order expansion converges like (ln ln d)²/ln d.
    """
    return covering_tau(params, m, sf_dm_sample, constants)
