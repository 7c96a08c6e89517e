"""Log-domain special functions.

Every quantity here is returned as a natural logarithm: ball volumes, complete
and lower incomplete beta values. Probabilities of caps in dimension 10^3 and
beyond sit far outside the range of a double, so nothing is exponentiated
until a caller explicitly asks for it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError

logger = logging.getLogger(__name__)

LogValue = float

SERIES_REL_TOL = 1e-16
SERIES_MAX_TERMS = 10**6
_SERIES_BLOCK = 4096
_VECTOR_TERM_LIMIT = 2000

_series_cap = SERIES_MAX_TERMS


@dataclass(frozen=True)
class BetaArgs:
    x: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(value) for value in (self.x, self.p, self.q)):
            raise DomainError(f"BetaArgs must be finite, got {self}")
        if not 0.0 <= self.x <= 1.0:
            raise DomainError(f"x must lie in [0, 1], got {self.x!r}")
        if self.p <= 0.0 or self.q <= 0.0:
            raise DomainError(f"p and q must be positive, got p={self.p!r}, q={self.q!r}")


def log_gamma(z: float) -> LogValue:
    if not (math.isfinite(z) and z > 0.0):
        raise DomainError(f"log_gamma requires z > 0, got {z!r}")
    return float(special.gammaln(z))


def log_unit_ball_volume(d: int) -> LogValue:
    """ln κ_d = (d/2)·ln π − ln Γ(1 + d/2)."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    return 0.5 * d * math.log(math.pi) - log_gamma(1.0 + 0.5 * d)


def log_complete_beta(p: float, q: float) -> LogValue:
    if not (p > 0.0 and q > 0.0 and math.isfinite(p) and math.isfinite(q)):
        raise DomainError(f"complete beta requires p, q > 0, got p={p!r}, q={q!r}")
    return float(special.betaln(p, q))


def log1mexp(x: float) -> LogValue:
    """ln(1 − e^x) for x <= 0."""
    if x > 0.0:
        raise DomainError(f"log1mexp requires x <= 0, got {x!r}")
    if x == 0.0:
        return -math.inf
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def logsumexp(values: Iterable[float]) -> LogValue:
    return float(special.logsumexp(np.fromiter(values, dtype=float)))


def _projected_terms(x, p: float, q: float):
    """Rough count of series terms needed before the remainder drops below tolerance."""
    x = np.asarray(x, dtype=float)
    one_minus = -np.expm1(np.log(x))
    peak = np.maximum(0.0, ((p + q) * x - (p + 1.0)) / one_minus)
    decay = -np.log(x)
    budget = math.log(1.0 / SERIES_REL_TOL) - np.log(one_minus) + max(q - 1.0, 0.0) * np.log(peak + 2.0)
    return peak + budget / decay


def _log_series_scalar(x: float, p: float, q: float, max_terms: int) -> LogValue:
    log_prefactor = p * math.log(x) + q * math.log1p(-x) - math.log(p)
    total = 1.0
    term = 1.0
    start = 0
    while start < max_terms:
        n = np.arange(start, min(start + _SERIES_BLOCK, max_terms), dtype=float)
        ratios = (p + q + n) / (p + 1.0 + n) * x
        terms = term * np.cumprod(ratios)
        running = total + np.cumsum(terms)
        next_ratio = np.maximum((p + q + n + 1.0) / (p + 2.0 + n) * x, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            remainder = np.where(next_ratio < 1.0, terms * next_ratio / (1.0 - next_ratio), np.inf)
        done = remainder <= SERIES_REL_TOL * running
        if done.any():
            stop = int(np.argmax(done))
            total = math.fsum([total, *terms[: stop + 1].tolist()])
            return log_prefactor + math.log(total)
        total = float(running[-1])
        term = float(terms[-1])
        start += n.size
    raise NumericError(
        f"incomplete beta series did not converge within {max_terms} terms (x={x!r}, p={p!r}, q={q!r})",
        partial_sum=log_prefactor + math.log(total),
    )


def _log_beta_via_tail(x: float, p: float, q: float) -> LogValue:
    """ln(B(p,q) − ∫_x^1 v^{p−1}(1−v)^{q−1} dv) with the tail done by QUADPACK."""
    y = 1.0 - x
    log_full = log_complete_beta(p, q)
    tail, _ = integrate.quad(
        lambda w: math.exp((p - 1.0) * math.log1p(-w)),
        0.0,
        y,
        weight="alg",
        wvar=(q - 1.0, 0.0),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    if tail <= 0.0:
        return log_full
    log_tail = math.log(tail)
    if log_tail >= log_full:
        raise NumericError(
            f"tail integral {tail!r} exceeds the complete beta at x={x!r}, p={p!r}, q={q!r}",
            partial_sum=log_tail,
        )
    logger.debug("incomplete beta via tail quadrature at x=%r p=%r q=%r", x, p, q)
    return log_full + log1mexp(log_tail - log_full)


def set_series_max_terms(limit: int) -> None:
    """Process-wide cap on series terms before the tail-quadrature fallback."""
    global _series_cap
    if int(limit) != limit or limit < 1:
        raise DomainError(f"series term cap must be a positive integer, got {limit!r}")
    _series_cap = int(limit)


def log_lower_incomplete_beta(args: BetaArgs, max_terms: Optional[int] = None) -> LogValue:
    """ln B(x;p,q) from the hypergeometric series

        B(x;p,q) = x^p (1−x)^q / p · Σ_n (p+q)_n / (p+1)_n · x^n,

    with Pochhammer ratios multiplied in linear domain and the prefactor kept
    in log domain. When the series would need more than ``max_terms`` terms the
    value is taken as B(p,q) minus the upper tail integral.
    """
    max_terms = max_terms or _series_cap
    x, p, q = args.x, args.p, args.q
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return log_complete_beta(p, q)
    if float(_projected_terms(x, p, q)) > max_terms:
        return _log_beta_via_tail(x, p, q)
    return _log_series_scalar(x, p, q, max_terms)


def _log_series_vector(x: np.ndarray, p: float, q: float) -> Tuple[np.ndarray, np.ndarray]:
    log_prefactor = p * np.log(x) + q * np.log1p(-x) - math.log(p)
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for n in range(4 * _VECTOR_TERM_LIMIT):
        term = np.where(active, term * ((p + q + n) / (p + 1.0 + n)) * x, term)
        total = np.where(active, total + term, total)
        next_ratio = np.maximum((p + q + n + 1.0) / (p + 2.0 + n) * x, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            remainder = np.where(next_ratio < 1.0, term * next_ratio / (1.0 - next_ratio), np.inf)
        active &= ~(remainder <= SERIES_REL_TOL * total)
        if not active.any():
            break
    return log_prefactor + np.log(total), active


def log_lower_incomplete_beta_many(
    x, p: float, q: float, max_terms: Optional[int] = None
) -> np.ndarray:
    """Vectorised ln B(x;p,q) over an array of x with fixed (p, q)."""
    if not (p > 0.0 and q > 0.0):
        raise DomainError(f"p and q must be positive, got p={p!r}, q={q!r}")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any((x < 0.0) | (x > 1.0)):
        raise DomainError("x must lie in [0, 1]")
    out = np.empty(x.shape, dtype=float)
    flat_x = x.reshape(-1)
    flat_out = out.reshape(-1)
    flat_out[flat_x == 0.0] = -np.inf
    flat_out[flat_x == 1.0] = log_complete_beta(p, q)
    inner = np.flatnonzero((flat_x > 0.0) & (flat_x < 1.0))
    if inner.size == 0:
        return out
    fast = _projected_terms(flat_x[inner], p, q) <= _VECTOR_TERM_LIMIT
    fast_idx = inner[fast]
    slow_idx = inner[~fast]
    if fast_idx.size:
        values, unfinished = _log_series_vector(flat_x[fast_idx], p, q)
        flat_out[fast_idx] = values
        slow_idx = np.concatenate([slow_idx, fast_idx[unfinished]])
    for index in slow_idx:
        flat_out[index] = log_lower_incomplete_beta(BetaArgs(float(flat_x[index]), p, q), max_terms)
    return out


def incomplete_beta_bounds(args: BetaArgs) -> Tuple[LogValue, LogValue]:
    """Two-sided bracket for ln B(x;p,q).

    The base x^p (1−x)^{q−1} / p and the base times
    1 / (1 − (q−1)/(p+1) · x/(1−x)); which one is the lower bound depends on
    the sign of q − 1.
    """
    x, p, q = args.x, args.p, args.q
    if not 0.0 < x < 1.0:
        raise DomainError(f"bounds require 0 < x < 1, got {x!r}")
    if not (p + q) * x < p + 1.0:
        raise DomainError(f"bounds require (p+q)x < p+1, got x={x!r}, p={p!r}, q={q!r}")
    base = p * math.log(x) + (q - 1.0) * math.log1p(-x) - math.log(p)
    correction = (q - 1.0) / (p + 1.0) * x / (1.0 - x)
    corrected = base - math.log1p(-correction)
    return min(base, corrected), max(base, corrected)


def log_lower_incomplete_beta_quad(args: BetaArgs) -> LogValue:
    """Independent quadrature evaluation of ln B(x;p,q).

    Integrates the rescaled integrand piecewise, with breakpoints at the mode,
    geometrically below x, and at 1 − 2^{−k} towards the v = 1 endpoint.
    """
    x, p, q = args.x, args.p, args.q
    if x == 0.0:
        return -math.inf

    def log_integrand(v: float) -> float:
        return (p - 1.0) * math.log(v) + (q - 1.0) * math.log1p(-v)

    points = {0.0, x}
    points.update(x * (1.0 - 2.0**-j) for j in range(1, 41))
    points.update(1.0 - 2.0**-k for k in range(1, 53) if 1.0 - 2.0**-k < x)
    if p > 1.0 and q > 1.0:
        mode = (p - 1.0) / (p + q - 2.0)
        if 0.0 < mode < x:
            points.add(mode)
    grid = sorted(points)
    interior = [log_integrand(v) for v in grid if 0.0 < v < 1.0]
    scale = max(interior)

    pieces = []
    for lo, hi in zip(grid[:-1], grid[1:]):
        singular = (lo == 0.0 and p < 1.0) or (hi == 1.0 and q < 1.0)
        ends = [log_integrand(v) for v in (lo, hi) if 0.0 < v < 1.0]
        if not singular and ends and max(ends) < scale - 80.0:
            continue
        value, _ = integrate.quad(
            lambda v: math.exp(log_integrand(v) - scale),
            lo,
            hi,
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
        pieces.append(value)
    total = math.fsum(pieces)
    if total <= 0.0:
        raise NumericError(f"quadrature returned a non-positive mass for {args}")
    return scale + math.log(total)


def log_expm1(x: float) -> LogValue:
    """ln(e^x − 1) for x > 0, without cancellation for small x or overflow for large x."""
    if not x > 0.0:
        raise DomainError(f"log_expm1 requires x > 0, got {x!r}")
    if x < 30.0:
        return math.log(math.expm1(x))
    return x + math.log1p(-math.exp(-x))
