"""Sphere covering by Poisson geodesic caps.

The event {h_{d,m} ≥ r} is the event that S^{m−1} is covered by caps
centred at the directions of the projected points lying beyond level r, with
angular radius a·ρ. This module samples that cap process, checks coverage
exactly on the circle (m = 2) and approximately on S² (m = 3), and evaluates
the Janson functional and the radius-law hypotheses behind the Gumbel limit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError, ResourceCapError
from .exactlaw import (
    SUPERCRITICAL_GAMMA,
    ModelParams,
    janson_alpha,
    janson_b,
    log_sphere_area,
    rayleigh_moment,
)
from .roots import bisect_increasing, bisect_increasing_many
from .rng import SeedLike, as_generator, replication_rng
from .specfun import (
    BetaArgs,
    LogValue,
    log_complete_beta,
    log_lower_incomplete_beta,
    log_lower_incomplete_beta_many,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MAX_EXPECTED_ARCS = 1e7
SPHERE_GRID_POINTS = 100_000
TOTAL_INTENSITY_MODES = ("sphere-measure", "point-count")
W1_TAIL_CUTOFF = 1e-12


@dataclass(frozen=True)
class CoveringInstance:
    d: int
    m: int
    r: float
    a: float
    log_Lambda: LogValue
    log_norm: LogValue
    total_intensity: str = "sphere-measure"

    @property
    def p(self) -> float:
        return 1.0 + 0.5 * (self.d - self.m)

    @property
    def q(self) -> float:
        return 0.5 * self.m

    @property
    def rho_max(self) -> float:
        return math.acos(self.r) / self.a

    @property
    def log_expected_caps(self) -> LogValue:
        if self.total_intensity == "sphere-measure":
            return self.log_Lambda + log_sphere_area(self.m)
        return self.log_Lambda

    @property
    def expected_caps(self) -> float:
        return math.exp(self.log_expected_caps) if self.log_expected_caps < 709.0 else math.inf

    def _tail_argument(self, rho):
        cosine = np.cos(self.a * np.asarray(rho, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (cosine - self.r) * (cosine + self.r) / (cosine * cosine)
        return np.clip(np.where(np.asarray(rho) >= self.rho_max, 0.0, x), 0.0, 1.0)

    def log_tail(self, rho: float) -> LogValue:
        """ln P(R > ρ) = ln B(1 − r²/cos²(aρ); p, q) − ln B(1 − r²; p, q)."""
        if rho <= 0.0:
            return 0.0
        if rho >= self.rho_max:
            return -math.inf
        x = float(self._tail_argument(rho))
        if x <= 0.0:
            return -math.inf
        return min(0.0, log_lower_incomplete_beta(BetaArgs(x, self.p, self.q)) - self.log_norm)

    def log_tail_many(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        x = self._tail_argument(np.maximum(rho, 0.0))
        values = log_lower_incomplete_beta_many(x, self.p, self.q) - self.log_norm
        return np.where(rho <= 0.0, 0.0, np.minimum(values, 0.0))

    def tail(self, rho: float) -> float:
        return math.exp(self.log_tail(rho))


@dataclass(frozen=True)
class ArcSet:
    centers: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self) -> None:
        centers = np.mod(np.asarray(self.centers, dtype=float).reshape(-1), TWO_PI)
        widths = np.asarray(self.half_widths, dtype=float).reshape(-1)
        if centers.shape != widths.shape:
            raise DomainError("arc centers and half-widths must have the same length")
        if np.any(~(widths > 0.0)):
            raise DomainError("arc half-widths must be positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "half_widths", widths)

    @property
    def size(self) -> int:
        return int(self.centers.shape[0])


@dataclass(frozen=True)
class CoveringEstimate:
    probability: float
    stderr: float
    n_reps: int
    approximate: bool = False


@dataclass(frozen=True)
class AppendixReport:
    d: int
    m: int
    r: float
    a: float
    w: float
    sup_ratio: float
    ratio_ok: bool
    w1: float
    w1_truncation: float
    bound_shape: float
    w1_scaled: float
    decay: float
    decay_gamma: float


# ---------------------------------------------------------------------------
# instances and radius sampling


def build_instance(
    params: ModelParams, m: int, r: float, total_intensity: str = "sphere-measure"
) -> CoveringInstance:
    """Covering instance for the event {h_{d,m} ≥ r}.

    Λ = λκ_d · B(1 − r²; p, q) / B(p, q) with p = 1 + (d − m)/2, q = m/2 and
    a = √(1 − r²)/(r√d).
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"level r must lie in (0, 1), got {r!r}")
    if int(m) != m or not 2 <= m < params.d:
        raise DomainError(f"need 2 <= m < d, got m={m!r}, d={params.d}")
    if total_intensity not in TOTAL_INTENSITY_MODES:
        raise DomainError(f"total_intensity must be one of {TOTAL_INTENSITY_MODES}, got {total_intensity!r}")
    d = params.d
    p, q = 1.0 + 0.5 * (d - m), 0.5 * m
    log_norm = log_lower_incomplete_beta(BetaArgs((1.0 - r) * (1.0 + r), p, q))
    log_Lambda = params.L + log_norm - log_complete_beta(p, q)
    a = math.sqrt((1.0 - r) * (1.0 + r)) / (r * math.sqrt(d))
    return CoveringInstance(
        d=d,
        m=int(m),
        r=float(r),
        a=a,
        log_Lambda=log_Lambda,
        log_norm=log_norm,
        total_intensity=total_intensity,
    )


def sample_radius(instance: CoveringInstance, u: float) -> float:
    """ρ with P(R > ρ) = 1 − u, by bisection on [0, arccos(r)/a]."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    target = math.log1p(-u)

    def residual(rho: float) -> float:
        return target - instance.log_tail(rho)

    try:
        rho, _ = bisect_increasing(residual, 0.0, instance.rho_max, ftol=1e-10)
    except NumericError as exc:
        raise NumericError(f"radius bisection failed at u={u!r}") from exc
    return rho


def sample_radii(instance: CoveringInstance, u) -> np.ndarray:
    """Vectorised radius sampler.

    For m = 2 the radius law has q = 1 and inverts in closed form,
    tan(aρ) = √((1 − r²)(1 − (1 − u)^{1/p})) / r.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u > 1.0)):
        raise DomainError("u must lie in (0, 1]")
    if instance.m == 2:
        with np.errstate(divide="ignore"):
            shrink = -np.expm1(np.log1p(-u) / instance.p)
        r = instance.r
        angle = np.arctan(np.sqrt((1.0 - r) * (1.0 + r) * shrink) / r)
        return angle / instance.a
    with np.errstate(divide="ignore"):
        targets = np.log1p(-u)
    return bisect_increasing_many(
        lambda rho: targets - instance.log_tail_many(rho),
        np.zeros(u.shape),
        np.full(u.shape, instance.rho_max),
    )


def _cap_count(instance: CoveringInstance, rng: np.random.Generator) -> int:
    if instance.log_expected_caps > math.log(MAX_EXPECTED_ARCS):
        raise ResourceCapError(
            f"expected cap count {instance.expected_caps:.3g} exceeds the cap {MAX_EXPECTED_ARCS:.0e}"
        )
    if instance.log_expected_caps == -math.inf:
        return 0
    return int(rng.poisson(instance.expected_caps))


def sample_covering_m2(instance: CoveringInstance, seed: SeedLike = None) -> ArcSet:
    if instance.m != 2:
        raise DomainError(f"circle covering needs m = 2, got m={instance.m}")
    rng = as_generator(seed)
    count = _cap_count(instance, rng)
    centers = rng.random(count) * TWO_PI
    radii = sample_radii(instance, 1.0 - rng.random(count))
    return ArcSet(centers=centers, half_widths=instance.a * radii)


def uniform_arcs(n: int, arc_fraction: float, rng: np.random.Generator) -> ArcSet:
    """n arcs with uniform centres, each covering ``arc_fraction`` of the circle."""
    if not arc_fraction > 0.0:
        raise DomainError(f"arc_fraction must be positive, got {arc_fraction!r}")
    return ArcSet(centers=rng.random(n) * TWO_PI, half_widths=np.full(n, math.pi * arc_fraction))


# ---------------------------------------------------------------------------
# coverage checks


def _sweep(arcs: ArcSet) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted closed intervals on [0, 2π] and the running right end of their union."""
    starts = np.mod(arcs.centers - arcs.half_widths, TWO_PI)
    ends = starts + 2.0 * arcs.half_widths
    wraps = ends > TWO_PI
    seg_starts = np.concatenate([starts, np.zeros(int(wraps.sum()))])
    seg_ends = np.concatenate([np.minimum(ends, TWO_PI), ends[wraps] - TWO_PI])
    order = np.argsort(seg_starts, kind="stable")
    seg_starts = seg_starts[order]
    reach = np.maximum.accumulate(seg_ends[order])
    return seg_starts, reach


def is_circle_covered(arcs: ArcSet) -> bool:
    if arcs.size == 0:
        return False
    if np.any(arcs.half_widths >= math.pi):
        return True
    starts, reach = _sweep(arcs)
    previous = np.concatenate([[0.0], reach[:-1]])
    if np.any(starts > previous):
        return False
    return bool(reach[-1] >= TWO_PI)


def uncovered_length(arcs: ArcSet) -> float:
    """Total measure of the circle left uncovered."""
    if arcs.size == 0:
        return TWO_PI
    if np.any(arcs.half_widths >= math.pi):
        return 0.0
    starts, reach = _sweep(arcs)
    previous = np.concatenate([[0.0], reach[:-1]])
    gaps = np.maximum(starts - previous, 0.0)
    return math.fsum(gaps.tolist()) + max(TWO_PI - float(reach[-1]), 0.0)


def fibonacci_sphere(n: int = SPHERE_GRID_POINTS) -> np.ndarray:
    """n quasi-uniform points on S²."""
    index = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * index / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * index
    radius = np.sqrt(1.0 - z * z)
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def is_sphere_covered_grid(
    centers: np.ndarray, angular_radii: np.ndarray, grid: np.ndarray, chunk: int = 256
) -> bool:
    """Approximate S² coverage: every grid point within some cap."""
    uncovered = np.ones(grid.shape[0], dtype=bool)
    thresholds = np.cos(np.minimum(angular_radii, math.pi))
    for start in range(0, centers.shape[0], chunk):
        remaining = np.flatnonzero(uncovered)
        if remaining.size == 0:
            break
        block = slice(start, start + chunk)
        hits = (grid[remaining] @ centers[block].T) >= thresholds[block]
        uncovered[remaining[hits.any(axis=1)]] = False
    return not uncovered.any()


def sample_covering_m3_grid(
    instance: CoveringInstance, seed: SeedLike = None, grid: Optional[np.ndarray] = None
) -> bool:
    if instance.m != 3:
        raise DomainError(f"sphere grid covering needs m = 3, got m={instance.m}")
    rng = as_generator(seed)
    count = _cap_count(instance, rng)
    gaussian = rng.standard_normal((count, 3))
    centers = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
    radii = sample_radii(instance, 1.0 - rng.random(count))
    grid = fibonacci_sphere() if grid is None else grid
    return is_sphere_covered_grid(centers, instance.a * radii, grid)


# ---------------------------------------------------------------------------
# probabilities


def stevens_covering_probability(n: int, arc_fraction: float) -> float:
    """P(n uniform arcs of length ``arc_fraction``·2π cover the circle).

    Σ_k (−1)^k C(n, k) (1 − k·arc_fraction)_+^{n−1}, summed in rational arithmetic.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n!r}")
    if not arc_fraction > 0.0:
        raise DomainError(f"arc_fraction must be positive, got {arc_fraction!r}")
    if arc_fraction >= 1.0:
        return 1.0
    n = int(n)
    fraction = Fraction(arc_fraction)
    total = Fraction(0)
    for k in range(n + 1):
        base = 1 - k * fraction
        if base <= 0:
            break
        total += (-1) ** k * math.comb(n, k) * base ** (n - 1)
    return float(total)


def covering_replication(
    instance: CoveringInstance,
    master_seed: int,
    index: int,
    grid: Optional[np.ndarray] = None,
    stream: int = 0,
) -> bool:
    rng = replication_rng(master_seed, index, stream)
    if instance.m == 2:
        return is_circle_covered(sample_covering_m2(instance, rng))
    if instance.m == 3:
        return sample_covering_m3_grid(instance, rng, grid)
    raise DomainError(f"coverage is only simulated for m in (2, 3), got m={instance.m}")


def binomial_estimate(hits: int, n_reps: int, approximate: bool = False) -> CoveringEstimate:
    probability = hits / n_reps
    stderr = math.sqrt(probability * (1.0 - probability) / n_reps)
    return CoveringEstimate(probability=probability, stderr=stderr, n_reps=n_reps, approximate=approximate)


def estimate_covering_probability(
    instance: CoveringInstance, n_reps: int, seed: int, grid_points: int = SPHERE_GRID_POINTS
) -> CoveringEstimate:
    if n_reps < 1:
        raise DomainError(f"n_reps must be >= 1, got {n_reps!r}")
    grid = None
    if instance.m == 3:
        logger.warning("m = 3 coverage is checked on a %d-point grid and is approximate", grid_points)
        grid = fibonacci_sphere(grid_points)
    hits = sum(covering_replication(instance, seed, index, grid) for index in range(n_reps))
    return binomial_estimate(hits, n_reps, approximate=instance.m == 3)


def mean_radius(instance: CoveringInstance) -> float:
    """E[R] = ∫ P(R > ρ) dρ over [0, arccos(r)/a]."""
    value, _ = integrate.quad(
        lambda rho: math.exp(instance.log_tail(rho)), 0.0, instance.rho_max, limit=200
    )
    return value


def gap_count_prediction(instance: CoveringInstance) -> float:
    """Poisson-clumping estimate exp(−T·e^{−c}) of the circle covering probability.

    T is the expected arc count and c = T·E[2aR]/(2π) the mean number of
    arcs over a fixed point; T·e^{−c} counts uncovered gaps.
    """
    if instance.m != 2:
        raise DomainError("gap-count prediction is for circle coverings (m = 2)")
    count = instance.expected_caps
    if count == 0.0:
        return 0.0
    multiplicity = count * 2.0 * instance.a * mean_radius(instance) / TWO_PI
    return math.exp(-count * math.exp(-multiplicity))


# ---------------------------------------------------------------------------
# Janson's condition and the radius-law hypotheses


def janson_functional(
    log_Lambda: LogValue,
    m: int,
    a: float,
    moments: Tuple[float, float],
    alpha: Optional[float] = None,
) -> float:
    """J = b a^D v(S^{m−1}) Λ − log(1/(b a^D)) − D log log(1/(b a^D)) − log α, D = m − 1.

    ``moments`` is (E[R^{D−1}], E[R^D]); α defaults to the value computed from them.
    """
    D = m - 1
    if D < 1 or not a > 0.0:
        raise DomainError(f"need m >= 2 and a > 0, got m={m!r}, a={a!r}")
    log_volume = log_sphere_area(m)
    b = janson_b(D, moments[1], log_volume)
    alpha = janson_alpha(D, moments[0], moments[1]) if alpha is None else alpha
    log_small = math.log(b) + D * math.log(a)
    if log_small >= 0.0:
        raise DomainError(f"need b·a^D < 1, got {math.exp(log_small)!r}")
    s = -log_small
    if s <= 1.0:
        raise DomainError(f"log(1/(b a^D)) = {s!r} must exceed 1")
    mass = math.exp(log_small + log_volume + log_Lambda)
    return mass - s - D * math.log(s) - math.log(alpha)


def rayleigh_moments(m: int) -> Tuple[float, float]:
    return rayleigh_moment(m - 2), rayleigh_moment(m - 1)


def rayleigh_log_tail(rho, scale: float = 1.0):
    """ln P(scale·R > ρ) for a standard Rayleigh R."""
    return -0.5 * (np.asarray(rho, dtype=float) / scale) ** 2


def sup_tail_ratio(
    log_tail: Callable[[np.ndarray], np.ndarray], scale: float, grid: np.ndarray
) -> float:
    """sup over ``grid`` of P(R_a > ρ) / P(scale·R > ρ)."""
    log_ratio = log_tail(grid) - rayleigh_log_tail(grid, scale)
    return float(np.exp(np.max(log_ratio)))


def log_radius_wasserstein(
    tail_a: Callable[[float], float],
    tail_b: Callable[[float], float],
    rho_lo: float,
    rho_hi: float,
    pieces: int = 24,
) -> float:
    """∫ |P(R_a > ρ) − P(R_b > ρ)| dρ/ρ over [rho_lo, rho_hi], integrated in ln ρ."""
    edges = np.linspace(math.log(rho_lo), math.log(rho_hi), pieces + 1)
    total = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, error = integrate.quad(
            lambda t: abs(tail_a(math.exp(t)) - tail_b(math.exp(t))), lo, hi, limit=200
        )
        if error > max(1e-9, 1e-6 * abs(value)):
            raise NumericError(f"W1 integral did not converge on [{lo:.3g}, {hi:.3g}] (error {error:.3g})")
        total.append(value)
    return math.fsum(total)


def rayleigh_log_truncation(rho_hi: float) -> float:
    """∫_{rho_hi}^∞ P(R > ρ) dρ/ρ = E1(rho_hi²/2)/2."""
    return 0.5 * float(special.exp1(0.5 * rho_hi * rho_hi))


def verify_appendix_hypotheses(
    params: ModelParams, m: int, r: float, w: float, grid_points: int = 10_000
) -> AppendixReport:
    """Numerical check of the two radius-law hypotheses used by the coupling argument.

    (i) sup_ρ P(R_a > ρ) / P((1 + w/log(1/a))·R > ρ) ≤ 1 on a log-spaced grid;
    (ii) W₁(log R_a, log R) next to the shape log²(dr²)/(dr²).
    """
    if not w > 0.0:
        raise DomainError(f"w must be positive, got {w!r}")
    instance = build_instance(params, m, r)
    a, d = instance.a, params.d
    log_inv_a = -math.log(a)
    if log_inv_a <= 0.0:
        raise DomainError(f"the radius scale a = {a!r} must be below 1")
    scale = 1.0 + w / log_inv_a
    grid = np.geomspace(1e-4, instance.rho_max, grid_points, endpoint=False)
    sup_ratio = sup_tail_ratio(instance.log_tail_many, scale, grid)

    rho_hi = math.sqrt(-2.0 * math.log(W1_TAIL_CUTOFF))
    w1 = log_radius_wasserstein(
        instance.tail, lambda rho: math.exp(-0.5 * rho * rho), 1e-8, rho_hi
    )
    truncation = rayleigh_log_truncation(rho_hi)
    dr2 = d * r * r
    bound_shape = math.log(dr2) ** 2 / dr2
    report = AppendixReport(
        d=d,
        m=int(m),
        r=float(r),
        a=a,
        w=float(w),
        sup_ratio=sup_ratio,
        ratio_ok=sup_ratio <= 1.0 + 1e-9,
        w1=w1,
        w1_truncation=truncation,
        bound_shape=bound_shape,
        w1_scaled=w1 / bound_shape,
        decay=a + log_inv_a / d,
        decay_gamma=a + log_inv_a ** (2.0 + SUPERCRITICAL_GAMMA) / d,
    )
    if not report.ratio_ok:
        logger.warning("radius tail ratio %.6g exceeds 1 at d=%d, r=%.4g", sup_ratio, d, r)
    return report


def sample_sf_dm_coupled(
    params: ModelParams,
    r_min: float,
    rng: np.random.Generator,
    total_intensity: str = "sphere-measure",
) -> float:
    """Exact draw of h_{d,2} from the projected points beyond ``r_min``.

    Projected norms s satisfy 1 − s² = (1 − r_min²)·U^{1/p}; at level r the
    point at angle φ covers the arc of half-width arccos(r/s) around φ, and
    h_{d,2} is the largest r whose arcs cover the circle. Draws below
    ``r_min`` are returned as ``r_min``. The point count follows
    ``total_intensity`` exactly as in :func:`build_instance`, so the draws share
    the law of the covering events at every level above ``r_min``.
    """
    if not 0.0 < r_min < 1.0:
        raise DomainError(f"r_min must lie in (0, 1), got {r_min!r}")
    instance = build_instance(params, 2, r_min, total_intensity=total_intensity)
    count = _cap_count(instance, rng)
    angles = rng.random(count) * TWO_PI
    with np.errstate(divide="ignore"):
        shrink = np.exp(np.log1p(-rng.random(count)) / instance.p)
    norms = np.sqrt(1.0 - (1.0 - r_min) * (1.0 + r_min) * shrink)

    def covered(level: float) -> bool:
        beyond = norms > level
        if not beyond.any():
            return False
        return is_circle_covered(
            ArcSet(centers=angles[beyond], half_widths=np.arccos(level / norms[beyond]))
        )

    if not covered(r_min):
        logger.debug("coupled h_{d,2} draw censored at r_min=%.6g", r_min)
        return r_min
    lo, hi = r_min, float(norms.max())
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if covered(mid):
            lo = mid
        else:
            hi = mid
    return lo
