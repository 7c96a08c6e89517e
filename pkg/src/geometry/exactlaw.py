"""Exact one-directional law of the support function and the asymptotic machinery
built on it: Wendel's containment probability, regime classification, Gumbel
normalizers, the implicit equations for r(τ) and a(τ), and Janson's constants.

Intensities are always described through L = ln(λκ_d).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import special, stats

from .errors import ClassificationError, DomainError, RootBracketError
from .roots import bisect_increasing, bisect_increasing_many
from .specfun import (
    BetaArgs,
    LogValue,
    log1mexp,
    log_expm1,
    log_gamma,
    log_lower_incomplete_beta,
    log_lower_incomplete_beta_many,
    log_unit_ball_volume,
    logsumexp,
)

logger = logging.getLogger(__name__)

H_MARGIN = math.log(1.01)
SUPERCRITICAL_GAMMA = 0.25
POISSON_SIGMAS = 12.0
NORMAL_APPROX_MEAN = 1e6
_EXACT_WENDEL_LIMIT = 1000


@dataclass(frozen=True)
class ModelParams:
    d: int
    L: float

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        if not math.isfinite(self.L):
            raise DomainError(f"L = ln(lambda kappa_d) must be finite, got {self.L!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def from_intensity(cls, d: int, lam: float) -> "ModelParams":
        if not lam > 0.0:
            raise DomainError(f"intensity must be positive, got {lam!r}")
        return cls(d=d, L=math.log(lam) + log_unit_ball_volume(d))

    @classmethod
    def critical(cls, d: int, x: float, y: float = 0.0) -> "ModelParams":
        """Critical family L = d·x + y."""
        return cls(d=d, L=d * x + y)

    @classmethod
    def volume_critical(cls, d: int, x: float) -> "ModelParams":
        """Scaling λκ_d = (d / 2x)^{d/2}, under which E|K|/κ_d → e^{−x}."""
        if not x > 0.0:
            raise DomainError(f"volume scaling requires x > 0, got {x!r}")
        return cls(d=d, L=0.5 * d * math.log(d / (2.0 * x)))

    @property
    def log_kappa(self) -> LogValue:
        return log_unit_ball_volume(self.d)

    @property
    def log_lambda(self) -> LogValue:
        return self.L - self.log_kappa

    @property
    def h_margin(self) -> float:
        """L − ln(2d): the finite-d surrogate of λκ_d / d > 2."""
        return self.L - math.log(2.0 * self.d)

    @property
    def satisfies_h(self) -> bool:
        return self.h_margin > H_MARGIN


class RegimeKind(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    x: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        if self.kind is RegimeKind.CRITICAL:
            if self.x is None or not (0.0 < self.x < math.inf):
                raise DomainError(f"critical regime needs x in (0, inf), got {self.x!r}")

    @classmethod
    def of(cls, kind: str, x: Optional[float] = None) -> "Regime":
        return cls(kind=RegimeKind(kind), x=x)


@dataclass(frozen=True)
class GumbelNormalizers1D:
    center: float
    scale_m: LogValue

    @staticmethod
    def center_of(d: int, L: float) -> float:
        return L / (d + 1.0)


@dataclass(frozen=True)
class GumbelNormalizersMD:
    m: int
    a_frak: float
    b_frak: float
    s_frak: float


@dataclass(frozen=True)
class JansonConstants:
    m: int
    alpha: float
    b: float
    A_m: float
    B_m: float
    alpha_form: str = "displayed"

    @property
    def log_B_m(self) -> float:
        return math.log(self.B_m)


@dataclass(frozen=True)
class CoveringScale:
    a: float
    r: float
    residual: float


# ---------------------------------------------------------------------------
# exact law of h(u)


def _check_unit_interval(r: float) -> None:
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"level r must lie in [0, 1], got {r!r}")


def log_cap_volume(d: int, r: float) -> LogValue:
    """ln |C^d(r;u)| = ln κ_{d−1} − ln 2 + ln B(1−r²; (d+1)/2, 1/2)."""
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    _check_unit_interval(r)
    if r == 1.0:
        return -math.inf
    x = (1.0 - r) * (1.0 + r)
    log_beta = log_lower_incomplete_beta(BetaArgs(x, 0.5 * (d + 1), 0.5))
    return log_unit_ball_volume(d - 1) - math.log(2.0) + log_beta


def _neg_exp(log_mass: float) -> float:
    return -math.exp(log_mass) if log_mass < 709.0 else -math.inf


def log_sf_cdf(params: ModelParams, r: float) -> LogValue:
    """ln P(h ≤ r) = −λ|C^d(r;u)|."""
    log_cap = log_cap_volume(params.d, r)
    if log_cap == -math.inf:
        return 0.0
    return _neg_exp(params.log_lambda + log_cap)


def log_sf_cdf_many(params: ModelParams, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any((r < 0.0) | (r > 1.0)):
        raise DomainError("levels must lie in [0, 1]")
    d = params.d
    x = (1.0 - r) * (1.0 + r)
    log_beta = log_lower_incomplete_beta_many(x, 0.5 * (d + 1), 0.5)
    log_mass = params.log_lambda + log_unit_ball_volume(d - 1) - math.log(2.0) + log_beta
    with np.errstate(over="ignore"):
        return -np.exp(log_mass)


def sf_inverse_cdf(params: ModelParams, u: float) -> float:
    """Level r with P(h ≤ r) = u, by bisection on [0, 1].

    Mass below r = 0 (at most e^{−λκ_d/2}) is reported as r = 0.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    target = math.log(u)

    def residual(r: float) -> float:
        return log_sf_cdf(params, r) - target

    if residual(0.0) >= 0.0:
        logger.debug("u=%r falls in the atom below r=0 for %s", u, params)
        return 0.0
    root, _ = bisect_increasing(residual, 0.0, 1.0, ftol=1e-11)
    return root


def sample_sf(params: ModelParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """n exact draws of h(u), vectorised inverse-CDF sampling."""
    u = rng.random(n)
    u = np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
    targets = np.log(u)
    return bisect_increasing_many(
        lambda r: log_sf_cdf_many(params, r) - targets,
        np.zeros(n),
        np.ones(n),
    )


# ---------------------------------------------------------------------------
# origin containment


def wendel_origin_probability(d: int, n: int) -> float:
    """P(0 ∈ conv{X_1..X_n}) for n i.i.d. symmetric points in general position in R^d."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    if int(n) != n or n < 0:
        raise DomainError(f"point count must be a non-negative integer, got {n!r}")
    d, n = int(d), int(n)
    if n <= d:
        return 0.0
    trials = n - 1
    if n <= _EXACT_WENDEL_LIMIT:
        lower = sum(math.comb(trials, k) for k in range(d))
        return float(1 - Fraction(lower, 2**trials))
    k = np.arange(trials + 1, dtype=float)
    log_binom = special.gammaln(trials + 1.0) - special.gammaln(k + 1.0) - special.gammaln(trials - k + 1.0)
    log_half = trials * math.log(2.0)
    if d - 1 < 0.5 * trials:
        log_lower = logsumexp(log_binom[:d]) - log_half
        return -math.expm1(log_lower)
    log_upper = logsumexp(log_binom[d:]) - log_half
    return math.exp(log_upper)


def log_poissonized_wendel_complement(dim: int, mean: float) -> LogValue:
    """ln Σ_n Poisson(mean)(n)·(1 − wendel(dim, n)) = ln P(S_{N−1} < dim).

    1 − wendel(dim, n) is the binomial lower tail P(Bin(n−1, ½) ≤ dim − 1), and 1
    for n ≤ dim. The sum runs from mean(1 − ln 2) − 12σ, below which the Poisson
    weights fall faster than the tail can grow, up to mean + 12σ.
    """
    if mean <= 0.0:
        return 0.0
    if math.isinf(mean):
        return -math.inf
    if mean > NORMAL_APPROX_MEAN:
        # S_{N−1} ≈ Normal((mean−1)/2, mean/2)
        z = (dim - 0.5 - 0.5 * (mean - 1.0)) / math.sqrt(0.5 * mean)
        logger.info("origin probability from the normal tail (mean count %.3g)", mean)
        return float(stats.norm.logcdf(z))
    sigma = math.sqrt(mean)
    lo = max(0, int(math.floor(mean * (1.0 - math.log(2.0)) - POISSON_SIGMAS * sigma)))
    hi = int(math.ceil(mean + POISSON_SIGMAS * sigma)) + 1
    counts = np.arange(lo, hi + 1)
    log_miss = np.zeros(counts.size)
    beyond = counts > dim
    log_miss[beyond] = stats.binom.logcdf(dim - 1, counts[beyond] - 1, 0.5)
    terms = stats.poisson.logpmf(counts, mean) + log_miss
    if lo > 0:
        # every n below the window with n ≤ dim misses the origin
        terms = np.append(terms, stats.poisson.logcdf(min(lo - 1, dim), mean))
    return min(0.0, logsumexp(terms))


def poissonized_wendel(dim: int, mean: float) -> float:
    """Σ_n Poisson(mean)(n)·wendel(dim, n), as one minus the log-domain complement."""
    return -math.expm1(log_poissonized_wendel_complement(dim, mean))


def log_origin_miss_probability(params: ModelParams) -> LogValue:
    """ln P(0 ∉ K)."""
    return log_poissonized_wendel_complement(
        params.d, math.exp(params.L) if params.L < 709.0 else math.inf
    )


def origin_probability(params: ModelParams) -> float:
    """P(0 ∈ K) = P(S_{N−1} ≥ d) with N ~ Poisson(λκ_d)."""
    return -math.expm1(log_origin_miss_probability(params))


# ---------------------------------------------------------------------------
# regimes


def classify_regime(
    log_intensity: Callable[[int], float],
    d0: int = 64,
    rungs: int = 12,
    tol: float = 1e-3,
) -> Regime:
    """Classify L(d) by the behaviour of L(d)/d along d0·2^k.

    Relative increments of L(d)/d that are small and shrink at least
    geometrically mean a finite limit x (extrapolated assuming an O(1/d)
    correction); persistently negative increments mean L/d → 0, persistently
    positive ones L/d → ∞.
    """
    ladder = [d0 * 2**k for k in range(rungs)]
    ratios = np.array([log_intensity(d) / d for d in ladder], dtype=float)
    if not np.all(np.isfinite(ratios)):
        raise ClassificationError(f"L(d) is not finite along the ladder {ladder}")
    if np.all(ratios[-4:] <= 0.0):
        return Regime(RegimeKind.SUBCRITICAL)
    scale = np.maximum(np.abs(ratios[:-1]), 1e-300)
    increments = np.diff(ratios) / scale
    last = increments[-3:]
    if abs(last[-1]) <= tol and (abs(last[-1]) <= 0.75 * abs(last[-2]) or abs(last[-1]) <= 1e-12):
        x = 2.0 * ratios[-1] - ratios[-2]
        if x <= 0.0:
            return Regime(RegimeKind.SUBCRITICAL)
        logger.debug("classified as critical with x=%.6g", x)
        return Regime(RegimeKind.CRITICAL, x=float(x))
    if np.all(last < 0.0):
        return Regime(RegimeKind.SUBCRITICAL)
    if np.all(last > 0.0):
        return Regime(RegimeKind.SUPERCRITICAL)
    raise ClassificationError(
        f"L(d)/d oscillates along the ladder (last relative increments {last.tolist()})"
    )


def hypothesis_status(params: ModelParams, regime: Regime) -> Dict[str, bool]:
    """Finite-d surrogates of the regime hypotheses used by the covering reduction."""
    d, L = params.d, params.L
    status = {"h": params.satisfies_h}
    if regime.kind is RegimeKind.SUBCRITICAL:
        status["regime"] = 2.0 * math.log(d) < L < d
    elif regime.kind is RegimeKind.CRITICAL:
        status["regime"] = L > 0.0
    else:
        status["regime"] = d < L < d ** (1.5 - SUPERCRITICAL_GAMMA)
    return status


def predict_regime_value(params: ModelParams, regime: Regime, m: int = 1) -> float:
    """First-order location of h (m = 1) or h_{d,m} (m ≥ 2); identical in all m."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m!r}")
    if regime.kind is RegimeKind.SUBCRITICAL:
        if params.L < 0.0:
            raise DomainError("subcritical location needs L >= 0")
        return math.sqrt(2.0 * params.L / params.d)
    if regime.kind is RegimeKind.CRITICAL:
        return math.sqrt(-math.expm1(-2.0 * regime.x))
    return 1.0 - 0.5 * math.exp(-2.0 * params.L / (params.d + 1))


def radius_vector_prediction(params: ModelParams, regime: Regime) -> Tuple[Optional[float], str]:
    """First-order information on ρ(u): an upper bound (subcritical) or the
    location (supercritical); nothing is known in the critical regime."""
    if regime.kind is RegimeKind.SUBCRITICAL:
        return predict_regime_value(params, regime), "upper-bound"
    if regime.kind is RegimeKind.SUPERCRITICAL:
        return predict_regime_value(params, regime), "location"
    return None, "unknown"


def volume_ratio_prediction(params: ModelParams, volume_x: Optional[float] = None) -> Tuple[float, str]:
    """Prediction for E|K|/κ_d.

    ``volume_x`` set: the critical volume scaling, limit e^{−x}. Otherwise the
    conjectured supercritical forms (reported, never asserted).
    """
    if volume_x is not None:
        return math.exp(-volume_x), "critical-volume-limit"
    d, L = params.d, params.L
    shrink = 0.5 * d * math.exp(-2.0 * L / (d + 1))
    if L < 0.5 * d * math.log(d):
        return math.exp(-shrink), "conjecture-log-ratio"
    return 1.0 - shrink, "conjecture-deficit"


# ---------------------------------------------------------------------------
# one-directional Gumbel limit


def gumbel_normalizers_1d(params: ModelParams, regime: Regime) -> GumbelNormalizers1D:
    d, L = params.d, params.L
    center = GumbelNormalizers1D.center_of(d, L)
    if regime.kind is RegimeKind.SUBCRITICAL:
        if L <= 0.0:
            raise DomainError("subcritical normalizer needs L > 0")
        if L <= 2.0 * math.log(d):
            logger.warning("L=%.4g <= 2 ln d at d=%d: subcritical Gumbel limit not expected", L, d)
        scale_m = math.log(4.0 * math.pi * L)
    elif regime.kind is RegimeKind.CRITICAL:
        if regime.x is None:
            raise DomainError("critical regime without x")
        scale_m = math.log(2.0 * math.pi * d) + log1mexp(-2.0 * regime.x)
    else:
        if L <= 0.0:
            raise DomainError("supercritical normalizer needs L > 0")
        scale_m = math.log(2.0 * math.pi * d) + log1mexp(-2.0 * L / (d + 1))
    return GumbelNormalizers1D(center=center, scale_m=scale_m)


def critical_shift_limit(x: float, y: float) -> float:
    """Location shift y − x of the statistic centred with d·x instead of d·L/(d+1)
    in the family L = d·x + y."""
    return y - x


def _expanding_bracket(func: Callable[[float], float]) -> Tuple[float, float]:
    """Bracket a sign change of a non-decreasing function on (−∞, 0)."""
    hi = None
    for k in range(0, 1075):
        candidate = -(2.0**-k)
        if func(candidate) > 0.0:
            hi = candidate
            break
    lo = None
    for k in range(0, 64):
        candidate = -(2.0**k)
        if func(candidate) < 0.0:
            lo = candidate
            break
    if lo is None or hi is None:
        raise RootBracketError("no sign change found on (-inf, 0)")
    return lo, hi


def solve_r_tau(params: ModelParams, tau: float) -> float:
    """Root r of (1−r²)^{(d+1)/2} / r = √(2πd)/λκ_d · e^{−τ}.

    Solved in t = ln(1 − r²), where the log-equation is increasing.
    """
    if not params.satisfies_h:
        logger.warning("(H) surrogate violated at d=%d, L=%.4g", params.d, params.L)
    d, L = params.d, params.L
    half_log_2pid = 0.5 * math.log(2.0 * math.pi * d)

    def equation(t: float) -> float:
        return L + 0.5 * (d + 1) * t - 0.5 * math.log(-math.expm1(t)) - half_log_2pid + tau

    lo, hi = _expanding_bracket(equation)
    t, residual = bisect_increasing(equation, lo, hi, ftol=1e-12)
    if abs(residual) > 1e-10:
        logger.warning("r(tau) residual %.3g above tolerance at d=%d", residual, d)
    return math.sqrt(-math.expm1(t))


# ---------------------------------------------------------------------------
# Janson's constants and the multi-directional limit


def rayleigh_moment(k: float) -> float:
    """E[R^k] = 2^{k/2} Γ(1 + k/2) for the standard Rayleigh law."""
    return math.exp(0.5 * k * math.log(2.0) + log_gamma(1.0 + 0.5 * k))


def log_sphere_area(m: int) -> LogValue:
    """ln v(S^{m−1}) = ln(m κ_m)."""
    return math.log(m) + log_unit_ball_volume(m)


def janson_alpha(D: int, moment_d_minus_1: float, moment_d: float) -> float:
    """α(R) = (1/D!)(√π Γ(1+D/2)/Γ((D+1)/2))^{D−1} E[R^{D−1}]^D / E[R^D]^{D−1}."""
    if D < 1 or moment_d_minus_1 <= 0.0 or moment_d <= 0.0:
        raise DomainError("alpha needs D >= 1 and positive moments")
    log_alpha = (
        -log_gamma(D + 1.0)
        + (D - 1) * (0.5 * math.log(math.pi) + log_gamma(1.0 + 0.5 * D) - log_gamma(0.5 * (D + 1)))
        + D * math.log(moment_d_minus_1)
        - (D - 1) * math.log(moment_d)
    )
    return math.exp(log_alpha)


def janson_b(D: int, moment_d: float, log_volume: float) -> float:
    """b(R; M) = π^{D/2} E[R^D] / (Γ(1+D/2) v_M(M))."""
    if D < 1 or moment_d <= 0.0:
        raise DomainError("b needs D >= 1 and a positive moment")
    return math.exp(
        0.5 * D * math.log(math.pi) + math.log(moment_d) - log_gamma(1.0 + 0.5 * D) - log_volume
    )


def displayed_rayleigh_alpha(m: int) -> Tuple[float, float]:
    """The two closed forms π^{(m−1)/2}Γ((m+1)/2)/(m−1)! and π^{m/2}/(2^{m−1}Γ(m/2)),
    equal by Legendre's duplication formula."""
    factorial_form = math.exp(
        0.5 * (m - 1) * math.log(math.pi) + log_gamma(0.5 * (m + 1)) - log_gamma(float(m))
    )
    duplication_form = math.exp(
        0.5 * m * math.log(math.pi) - (m - 1) * math.log(2.0) - log_gamma(0.5 * m)
    )
    return factorial_form, duplication_form


def janson_constants(m: int, alpha_form: str = "displayed") -> JansonConstants:
    """α, b, A_m and B_m for Rayleigh radii on S^{m−1}.

    ``alpha_form="displayed"`` uses the closed form π^{m/2}/(2^{m−1}Γ(m/2))
    (α = π/2, B₂ = π^{3/2}/√2 at m = 2); ``"janson"`` evaluates α(R) on the
    Rayleigh moments instead (α = 1 at m = 2).
    """
    if int(m) != m or m < 2:
        raise DomainError(f"m must be an integer >= 2, got {m!r}")
    D = m - 1
    b = janson_b(D, rayleigh_moment(D), log_sphere_area(m))
    if alpha_form == "janson":
        alpha = janson_alpha(D, rayleigh_moment(D - 1), rayleigh_moment(D))
    elif alpha_form == "displayed":
        alpha = displayed_rayleigh_alpha(m)[1]
    else:
        raise DomainError(f"unknown alpha form {alpha_form!r}")
    A_m = math.exp(
        0.5 * math.log(2.0) + 0.5 * D * math.log(math.pi) - math.log(D) - log_gamma(0.5 * m)
    )
    B_m = math.exp(math.log(alpha) + D * math.log(D) - math.log(b))
    return JansonConstants(m=int(m), alpha=alpha, b=b, A_m=A_m, B_m=B_m, alpha_form=alpha_form)


def _log1p_inv_da2(log_a: float, d: int) -> float:
    """ln(1 + 1/(d a²)) given ln a."""
    return float(np.logaddexp(0.0, -2.0 * log_a - math.log(d)))


def _log_a_tau_front(m: int) -> float:
    """ln(√2 π^{(m−1)/2} / Γ(m/2))."""
    return 0.5 * math.log(2.0) + 0.5 * (m - 1) * math.log(math.pi) - log_gamma(0.5 * m)


def solve_a_tau(
    params: ModelParams,
    m: int,
    tau: float,
    constants: Optional[JansonConstants] = None,
) -> CoveringScale:
    """Root a of

        √2 π^{(m−1)/2}/Γ(m/2) · λκ_d · a / (1 + 1/(d a²))^{d/2}
            = (m−1) log(1/a) + (m−1) log log(1/a) + log B_m + τ,

    solved in ln a with the residual measured as ln LHS − ln RHS.
    """
    constants = constants or janson_constants(m)
    if constants.m != m:
        raise DomainError(f"constants for m={constants.m} used with m={m}")
    d, L = params.d, params.L
    D = m - 1
    log_front = _log_a_tau_front(m)
    log_B = constants.log_B_m

    def equation(log_a: float) -> float:
        log_lhs = log_front + L + log_a - 0.5 * d * _log1p_inv_da2(log_a, d)
        s = -log_a
        rhs = D * s + D * math.log(s) + log_B + tau
        if rhs <= 0.0:
            return math.inf
        return log_lhs - math.log(rhs)

    lo, hi = _expanding_bracket(equation)
    log_a, residual = bisect_increasing(equation, lo, hi, ftol=1e-12)
    if abs(residual) > 1e-9:
        logger.warning("a(tau) residual %.3g above tolerance at d=%d", residual, d)
    a = math.exp(log_a)
    r = math.exp(-0.5 * math.log1p(d * a * a))
    return CoveringScale(a=a, r=r, residual=residual)


def covering_tau(
    params: ModelParams,
    m: int,
    r: float,
    constants: Optional[JansonConstants] = None,
) -> float:
    """The τ at which :func:`solve_a_tau` returns the level ``r``.

    With a = √(1 − r²)/(r√d) the factor (1 + 1/(d a²))^{−d/2} is (1 − r²)^{d/2},
    so τ is the left side of the a(τ) equation minus its τ-free right side.
    Decreasing in r; +inf once a ≥ 1 or the left side overflows.
    """
    constants = constants or janson_constants(m)
    if constants.m != m:
        raise DomainError(f"constants for m={constants.m} used with m={m}")
    if not 0.0 < r < 1.0:
        raise DomainError(f"level r must lie in (0, 1), got {r!r}")
    d, D = params.d, m - 1
    log_one_minus_sq = math.log1p(-r) + math.log1p(r)
    log_a = 0.5 * log_one_minus_sq - math.log(r) - 0.5 * math.log(d)
    if log_a >= 0.0:
        return math.inf
    log_lhs = _log_a_tau_front(m) + params.L + log_a + 0.5 * d * log_one_minus_sq
    if log_lhs > 709.0:
        return math.inf
    s = -log_a
    return math.exp(log_lhs) - D * s - D * math.log(s) - constants.log_B_m


def inverse_scale_prediction(params: ModelParams) -> float:
    """Leading-order 1/a ~ √(d((λκ_d)^{2/d} − 1)), valid in every regime."""
    if params.L <= 0.0:
        raise DomainError("1/a asymptotics need lambda kappa_d > 1")
    return math.exp(0.5 * (math.log(params.d) + log_expm1(2.0 * params.L / params.d)))


def gumbel_normalizers_md(
    params: ModelParams, m: int, constants: Optional[JansonConstants] = None
) -> GumbelNormalizersMD:
    constants = constants or janson_constants(m)
    d, L = params.d, params.L
    if L <= 0.0:
        raise DomainError("multi-directional normalizers need lambda kappa_d > 1")
    s = 0.5 * (math.log(d) + log_expm1(2.0 * L / d))
    if s <= 0.0:
        raise DomainError(f"s(d) = {s!r} must be positive")
    D = m - 1
    a_frak = (
        D * s * (math.log(constants.A_m) + L - math.log(s))
        - D * s * s
        - D * math.log(s)
        - constants.log_B_m
    )
    return GumbelNormalizersMD(m=int(m), a_frak=a_frak, b_frak=D * d * s, s_frak=s)
