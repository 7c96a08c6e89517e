from __future__ import annotations

import logging
from typing import Callable, Tuple

import numpy as np

from .errors import RootBracketError

logger = logging.getLogger(__name__)

MAX_BISECTIONS = 200


def bisect_increasing(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    ftol: float = 0.0,
    max_iter: int = MAX_BISECTIONS,
) -> Tuple[float, float]:
    """Root of a non-decreasing function on [lo, hi]; returns (root, residual).

    Stops when |func| <= ftol or when the bracket can no longer be halved in
    floating point.
    """
    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo > 0 or f_hi < 0:
        raise RootBracketError(
            f"No sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}"
        )
    if f_lo == 0:
        return lo, 0.0
    if f_hi == 0:
        return hi, 0.0
    best, best_residual = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    for iteration in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = func(mid)
        if abs(f_mid) < abs(best_residual):
            best, best_residual = mid, f_mid
        if abs(f_mid) <= ftol:
            logger.debug("bisection converged after %d steps", iteration + 1)
            return mid, f_mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return best, best_residual


def bisect_increasing_many(
    func: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    *,
    max_iter: int = MAX_BISECTIONS,
) -> np.ndarray:
    """Elementwise bisection for a vectorised non-decreasing function.

    ``func`` maps an array of abscissae to residuals (target already
    subtracted). Every element is assumed bracketed by ``lo``/``hi``.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        values = func(mid)
        below = active & (values < 0)
        above = active & ~(values < 0)
        lo = np.where(below, mid, lo)
        hi = np.where(above, mid, hi)
    return 0.5 * (lo + hi)
