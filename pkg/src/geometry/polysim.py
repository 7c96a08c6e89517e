"""Direct simulation of the Poisson polytope at desk-scale dimension.

Points are sampled in the unit ball, the support function and the
radius-vector function are evaluated on the sampled cloud, and the 2-D
projection gives h_{d,2} as the inradius of a planar hull around the origin.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ResourceCapError
from .exactlaw import ModelParams, log_poissonized_wendel_complement, log_sf_cdf
from .rng import SeedLike, as_generator, replication_rng
from .simplex import in_convex_hull

logger = logging.getLogger(__name__)

MAX_EXPECTED_POINTS = 1e7
UNIT_TOL = 1e-12
HULL_DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class PointCloud:
    d: int
    points: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float).reshape(-1, self.d)
        if points.shape[0] and np.any(np.linalg.norm(points, axis=1) > 1.0 + UNIT_TOL):
            raise DomainError("every point of a cloud must lie in the closed unit ball")
        object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def projected(self, m: int = 2) -> np.ndarray:
        return self.points[:, :m]


@dataclass(frozen=True)
class Polygon2D:
    """Convex polygon, vertices counter-clockwise."""

    vertices: np.ndarray

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    def edge_offsets(self) -> np.ndarray:
        """Signed distance from the origin to each edge's supporting line (positive inside)."""
        start = self.vertices
        edge = np.roll(start, -1, axis=0) - start
        cross = edge[:, 1] * start[:, 0] - edge[:, 0] * start[:, 1]
        return cross / np.linalg.norm(edge, axis=1)


def _check_unit(u: np.ndarray, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != d:
        raise DomainError(f"direction has dimension {u.shape[0]}, expected {d}")
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOL:
        raise DomainError(f"direction must be a unit vector, |u| = {np.linalg.norm(u)!r}")
    return u


def sample_uniform_ball(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform points of B^d as U^{1/d}·G/|G|."""
    gaussian = rng.standard_normal((n, d))
    gaussian /= np.linalg.norm(gaussian, axis=1, keepdims=True)
    radii = rng.random(n) ** (1.0 / d)
    return gaussian * radii[:, None]


def sample_poisson_ball(d: int, L: float, seed: SeedLike = None) -> PointCloud:
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    token = seed if isinstance(seed, int) else None
    if L == -math.inf:
        return PointCloud(d=d, points=np.empty((0, d)), seed=token)
    if math.isnan(L) or L > math.log(MAX_EXPECTED_POINTS):
        raise ResourceCapError(
            f"expected point count e^L = {math.exp(min(L, 709.0)):.3g} exceeds the cap {MAX_EXPECTED_POINTS:.0e}"
        )
    rng = as_generator(seed)
    count = int(rng.poisson(math.exp(L)))
    return PointCloud(d=d, points=sample_uniform_ball(d, count, rng), seed=token)


def support_value(cloud: PointCloud, u) -> float:
    u = _check_unit(u, cloud.d)
    if cloud.size == 0:
        return -math.inf
    return float(np.max(cloud.points @ u))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull2d(points) -> Polygon2D:
    """Monotone-chain convex hull; collinear and near-duplicate points are dropped."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return Polygon2D(vertices=np.empty((0, 2)))
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    unique = [pts[0]]
    for point in pts[1:]:
        if np.max(np.abs(point - unique[-1])) > HULL_DEDUP_TOL:
            unique.append(point)
    if len(unique) < 3:
        return Polygon2D(vertices=np.array(unique))

    lower: list = []
    for point in unique:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], point) <= HULL_DEDUP_TOL:
            lower.pop()
        lower.append(point)
    upper: list = []
    for point in reversed(unique):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], point) <= HULL_DEDUP_TOL:
            upper.pop()
        upper.append(point)
    return Polygon2D(vertices=np.array(lower[:-1] + upper[:-1]))


def sf_dm_via_projection(cloud: PointCloud, m: int = 2) -> float:
    """h_{d,2}: inradius around the origin of the hull of the projected cloud.

    A projected hull missing the origin gives the signed (non-positive)
    offset of the separating edge; fewer than three hull vertices give −inf.
    """
    if m != 2:
        raise DomainError(f"only m = 2 is implemented by projection, got m={m!r}")
    polygon = hull2d(cloud.projected(2))
    if polygon.n_vertices < 3:
        return -math.inf
    value = float(polygon.edge_offsets().min())
    if value <= 0.0:
        logger.warning("projected hull misses the origin (signed inradius %.3g)", value)
    return value


def origin_in_hull(cloud: PointCloud) -> bool:
    if cloud.size <= cloud.d:
        return False
    if cloud.d == 2:
        polygon = hull2d(cloud.points)
        return polygon.n_vertices >= 3 and bool(np.all(polygon.edge_offsets() >= 0.0))
    return in_convex_hull(cloud.points, np.zeros(cloud.d))


def radius_vector_value(cloud: PointCloud, u, tol: float = 1e-9) -> float:
    """ρ(u) = sup{t > 0 : t·u ∈ conv(cloud)} by bisection over LP membership.

    Returns 0 when the hull misses the origin.
    """
    u = _check_unit(u, cloud.d)
    if cloud.size == 0:
        raise DomainError("radius-vector function of an empty cloud")
    points = cloud.points
    hi = support_value(cloud, u)
    if hi <= 0.0 or not in_convex_hull(points, np.zeros(cloud.d)):
        logger.debug("origin outside the hull, radius-vector value set to 0")
        return 0.0
    if in_convex_hull(points, hi * u):
        return hi
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if in_convex_hull(points, mid * u):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class VolumeRatioEstimate:
    mean: float
    stderr: float
    n_clouds: int
    n_dirs: int


def _random_directions(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    gaussian = rng.standard_normal((n, d))
    return gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)


def volume_ratio_replication(d: int, L: float, n_dirs: int, master_seed: int, index: int) -> float:
    """Mean of ρ(U)^d over ``n_dirs`` directions for one cloud."""
    rng = replication_rng(master_seed, index)
    cloud = sample_poisson_ball(d, L, rng)
    if cloud.size == 0:
        return 0.0
    values = [radius_vector_value(cloud, u) ** d for u in _random_directions(d, n_dirs, rng)]
    return math.fsum(values) / n_dirs


def volume_ratio_estimate(d: int, L: float, n_dirs: int, n_clouds: int, seed: int) -> VolumeRatioEstimate:
    """Monte Carlo E|K|/κ_d = E[ρ(U)^d]; standard error taken across clouds."""
    if n_dirs < 1 or n_clouds < 1:
        raise DomainError("n_dirs and n_clouds must be positive")
    per_cloud = np.array(
        [volume_ratio_replication(d, L, n_dirs, seed, index) for index in range(n_clouds)]
    )
    stderr = float(per_cloud.std(ddof=1) / math.sqrt(n_clouds)) if n_clouds > 1 else math.nan
    return VolumeRatioEstimate(
        mean=float(per_cloud.mean()), stderr=stderr, n_clouds=n_clouds, n_dirs=n_dirs
    )


def radius_vector_cdf_bound(params: ModelParams, r: float) -> float:
    """Upper bound on P(ρ(u) ≤ r): 1 − Σ_n Poisson(ℓ)(n)·wendel(d−1, n), ℓ = −log P(h ≤ r)."""
    mean = -log_sf_cdf(params, r)
    return min(1.0, math.exp(log_poissonized_wendel_complement(params.d - 1, mean)))
