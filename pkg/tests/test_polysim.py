import math

import numpy as np
import pytest

from src.geometry.errors import DomainError, ResourceCapError
from src.geometry.exactlaw import ModelParams, log_sf_cdf_many, origin_probability, poissonized_wendel
from src.geometry.polysim import (
    PointCloud,
    hull2d,
    origin_in_hull,
    radius_vector_cdf_bound,
    radius_vector_value,
    sample_poisson_ball,
    sample_uniform_ball,
    sf_dm_via_projection,
    support_value,
    volume_ratio_estimate,
)
from src.geometry.rng import replication_rng
from src.geometry.simplex import (
    InfeasibleProblem,
    UnboundedProblem,
    in_convex_hull,
    solve_standard_form,
)
from src.pipeline.statistics import ks_distance


def _e(d, i=0):
    u = np.zeros(d)
    u[i] = 1.0
    return u


def _square(half_side, angle=0.0, d=2):
    corners = half_side * np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    corners = corners @ rotation.T
    if d > 2:
        corners = np.hstack([corners, np.full((4, d - 2), 0.05)])
    return corners


# ---------------------------------------------------------------------------
# sampling


def test_empty_cloud():
    cloud = sample_poisson_ball(3, -math.inf, seed=1)
    assert cloud.size == 0
    assert support_value(cloud, _e(3)) == -math.inf
    assert sf_dm_via_projection(cloud) == -math.inf
    assert not origin_in_hull(cloud)


def test_resource_cap():
    with pytest.raises(ResourceCapError):
        sample_poisson_ball(3, math.log(1e8), seed=1)


def test_cloud_rejects_points_outside_ball():
    with pytest.raises(DomainError):
        PointCloud(d=2, points=np.array([[1.0, 0.5]]))


def test_poisson_count_mean():
    sizes = [sample_poisson_ball(3, math.log(50.0), seed=replication_rng(7, i)).size for i in range(400)]
    assert abs(np.mean(sizes) - 50.0) < 4.0 * math.sqrt(50.0 / 400)


def test_uniform_ball_radial_law(rng):
    points = sample_uniform_ball(5, 20_000, rng)
    norms = np.linalg.norm(points, axis=1)
    assert norms.max() <= 1.0
    # |X|^d is uniform on [0, 1]
    assert abs(np.mean(norms**5) - 0.5) < 4.0 * math.sqrt(1.0 / 12.0 / 20_000)


def test_same_seed_same_cloud():
    first = sample_poisson_ball(4, math.log(30.0), seed=replication_rng(3, 11))
    second = sample_poisson_ball(4, math.log(30.0), seed=replication_rng(3, 11))
    np.testing.assert_array_equal(first.points, second.points)


# ---------------------------------------------------------------------------
# support function and hull


def test_support_value_single_point():
    cloud = PointCloud(d=3, points=np.array([[0.1, 0.2, 0.3]]))
    assert support_value(cloud, _e(3)) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        support_value(cloud, np.array([1.0, 1.0, 0.0]))
    with pytest.raises(DomainError):
        support_value(cloud, _e(2))


def test_hull_triangle_drops_interior_and_collinear_points():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2], [0.5, 0.0]])
    polygon = hull2d(points)
    assert polygon.n_vertices == 3


def test_hull_of_circle_keeps_every_point():
    angles = np.linspace(0.0, 2.0 * math.pi, 100, endpoint=False)
    points = 0.9 * np.column_stack([np.cos(angles), np.sin(angles)])
    assert hull2d(points).n_vertices == 100


def test_hull_contains_every_point(rng):
    points = rng.uniform(-1.0, 1.0, (60, 2))
    vertices = hull2d(points).vertices
    for vertex in vertices:
        assert np.any(np.all(points == vertex, axis=1))
    nxt = np.roll(vertices, -1, axis=0)
    for point in points:
        cross = (nxt[:, 0] - vertices[:, 0]) * (point[1] - vertices[:, 1]) - (nxt[:, 1] - vertices[:, 1]) * (
            point[0] - vertices[:, 0]
        )
        assert np.all(cross >= -1e-12)


def test_hull_is_idempotent(rng):
    vertices = hull2d(rng.uniform(-1.0, 1.0, (80, 2))).vertices
    again = hull2d(vertices).vertices
    assert {tuple(v) for v in again} == {tuple(v) for v in vertices}


def test_hull_merges_near_duplicates():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [1.0 + 1e-14, 0.0], [0.0, 1.0]])
    assert hull2d(points).n_vertices == 3


def _brute_force_vertices(points):
    """Points that start an edge with every other point on its left."""
    vertices = set()
    for i, origin in enumerate(points):
        offsets = points - origin
        cross = offsets[:, None, 0] * offsets[None, :, 1] - offsets[:, None, 1] * offsets[None, :, 0]
        edges = np.all(cross >= 0.0, axis=1)
        edges[i] = False
        if edges.any():
            vertices.add(i)
    return {tuple(points[i]) for i in vertices}


@pytest.mark.parametrize("shape", ["square", "disc"])
def test_hull_matches_brute_force(rng, shape):
    for _ in range(5):
        if shape == "square":
            points = rng.uniform(-1.0, 1.0, (150, 2))
        else:
            points = sample_uniform_ball(2, 150, rng)
        assert {tuple(v) for v in hull2d(points).vertices} == _brute_force_vertices(points)


def test_square_inradius_and_rotation_invariance():
    assert sf_dm_via_projection(PointCloud(d=3, points=_square(0.7, d=3))) == pytest.approx(0.7, abs=1e-12)
    for angle in (0.1, 0.7, 2.0):
        cloud = PointCloud(d=2, points=_square(0.7, angle))
        assert sf_dm_via_projection(cloud) == pytest.approx(0.7, abs=1e-12)


def test_projection_is_invariant_under_planar_rotation(rng):
    for index in range(10):
        cloud = sample_poisson_ball(4, math.log(300.0), seed=replication_rng(19, index))
        angle = rng.uniform(0.0, 2.0 * math.pi)
        rotation = np.eye(4)
        rotation[:2, :2] = [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        rotated = PointCloud(d=4, points=cloud.points @ rotation.T)
        assert sf_dm_via_projection(rotated) == pytest.approx(sf_dm_via_projection(cloud), abs=1e-9)


def test_projection_missing_origin_is_non_positive(caplog):
    cloud = PointCloud(d=2, points=np.array([[0.3, 0.0], [0.6, 0.2], [0.5, -0.3]]))
    with caplog.at_level("WARNING"):
        value = sf_dm_via_projection(cloud)
    assert value <= 0.0
    assert "misses the origin" in caplog.text


def test_projection_needs_m_equal_two():
    with pytest.raises(DomainError):
        sf_dm_via_projection(PointCloud(d=3, points=_square(0.5, d=3)), m=3)


# ---------------------------------------------------------------------------
# linear programming and radius-vector function


def test_simplex_optimum():
    c = np.array([-1.0, -1.0, 0.0, 0.0])
    A = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    result = solve_standard_form(c, A, np.array([1.0, 2.0]))
    assert result.objective == pytest.approx(-3.0)
    np.testing.assert_allclose(result.x[:2], [1.0, 2.0])


def test_simplex_redundant_row():
    result = solve_standard_form([1.0, 2.0], [[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0])
    assert result.objective == pytest.approx(1.0)


def test_simplex_unbounded_and_infeasible():
    with pytest.raises(UnboundedProblem):
        solve_standard_form([-1.0, 0.0], [[1.0, -1.0]], [0.0])
    with pytest.raises(InfeasibleProblem):
        solve_standard_form([0.0, 0.0], [[1.0, 1.0]], [-1.0])


def test_convex_hull_membership():
    points = np.vstack([np.eye(3), -np.ones((1, 3)) / math.sqrt(3.0)])
    assert in_convex_hull(points, np.zeros(3))
    assert in_convex_hull(points, points[0])
    assert not in_convex_hull(points, np.ones(3))
    assert not in_convex_hull(np.empty((0, 3)), np.zeros(3))


def test_radius_vector_of_cube():
    corners = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
    cloud = PointCloud(d=3, points=corners / math.sqrt(3.0))
    assert radius_vector_value(cloud, _e(3)) == pytest.approx(1.0 / math.sqrt(3.0), abs=1e-8)
    assert radius_vector_value(cloud, np.ones(3) / math.sqrt(3.0)) == pytest.approx(1.0, abs=1e-8)


def test_radius_vector_zero_when_origin_outside():
    cloud = PointCloud(d=2, points=np.array([[0.3, 0.0], [0.6, 0.2], [0.5, -0.3]]))
    assert radius_vector_value(cloud, _e(2)) == 0.0


def test_radius_vector_below_support(rng):
    cloud = sample_poisson_ball(4, math.log(200.0), seed=rng)
    for _ in range(5):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        assert radius_vector_value(cloud, u) <= support_value(cloud, u) + 1e-12


def test_radius_vector_bound_is_monotone():
    params = ModelParams(d=6, L=math.log(200.0))
    bounds = [radius_vector_cdf_bound(params, r) for r in np.linspace(0.0, 0.95, 20)]
    assert all(0.0 <= value <= 1.0 for value in bounds)
    assert all(b >= a - 1e-12 for a, b in zip(bounds, bounds[1:]))


# ---------------------------------------------------------------------------
# origin containment against Wendel


def test_three_points_in_disc_contain_origin_a_quarter_of_the_time(rng):
    trials = 4000
    hits = sum(origin_in_hull(PointCloud(d=2, points=sample_uniform_ball(2, 3, rng))) for _ in range(trials))
    assert abs(hits / trials - 0.25) < 4.0 * math.sqrt(0.25 * 0.75 / trials)


def test_poisson_origin_frequency_matches_poissonized_wendel():
    trials = 1000
    L = math.log(6.0)
    hits = sum(origin_in_hull(sample_poisson_ball(3, L, seed=replication_rng(5, i))) for i in range(trials))
    expected = poissonized_wendel(3, 6.0)
    assert abs(hits / trials - expected) < 4.0 * math.sqrt(expected * (1.0 - expected) / trials)


@pytest.mark.slow
def test_origin_frequencies_at_full_scale(rng):
    trials = 100_000
    hits = sum(origin_in_hull(PointCloud(d=2, points=sample_uniform_ball(2, 3, rng))) for _ in range(trials))
    assert abs(hits / trials - 0.25) <= 3.0 * math.sqrt(0.25 * 0.75 / trials)

    params = ModelParams(d=3, L=math.log(30.0))
    hits = sum(origin_in_hull(sample_poisson_ball(3, params.L, seed=replication_rng(6, i))) for i in range(trials))
    expected = origin_probability(params)
    assert abs(hits / trials - expected) <= 3.0 * math.sqrt(expected * (1.0 - expected) / trials)


# ---------------------------------------------------------------------------
# volume ratio and the exact law


def test_volume_ratio_is_deterministic_and_in_range():
    first = volume_ratio_estimate(3, math.log(40.0), n_dirs=4, n_clouds=5, seed=9)
    second = volume_ratio_estimate(3, math.log(40.0), n_dirs=4, n_clouds=5, seed=9)
    assert first == second
    assert 0.0 < first.mean < 1.0
    with pytest.raises(DomainError):
        volume_ratio_estimate(3, 1.0, n_dirs=0, n_clouds=5, seed=9)


def _support_samples(d, L, n, seed):
    u = _e(d)
    return np.array([support_value(sample_poisson_ball(d, L, seed=replication_rng(seed, i)), u) for i in range(n)])


def test_simulated_support_matches_exact_law():
    params = ModelParams(d=3, L=math.log(30.0))
    samples = _support_samples(params.d, params.L, 300, seed=17)
    ks = ks_distance(samples, lambda r: np.exp(log_sf_cdf_many(params, np.clip(r, 0.0, 1.0))))
    assert ks < 0.12


@pytest.mark.slow
def test_simulated_support_matches_exact_law_large_sample():
    params = ModelParams(d=5, L=math.log(100.0))
    samples = _support_samples(params.d, params.L, 4000, seed=23)
    ks = ks_distance(samples, lambda r: np.exp(log_sf_cdf_many(params, np.clip(r, 0.0, 1.0))))
    assert ks < 0.035


@pytest.mark.slow
def test_simulated_support_matches_exact_law_at_full_scale():
    params = ModelParams(d=10, L=math.log(100.0))
    samples = _support_samples(params.d, params.L, 100_000, seed=29)
    ks = ks_distance(samples, lambda r: np.exp(log_sf_cdf_many(params, np.clip(r, 0.0, 1.0))))
    assert ks <= 0.01


@pytest.mark.slow
def test_radius_vector_never_exceeds_support():
    for index in range(200):
        rng = replication_rng(61, index)
        cloud = sample_poisson_ball(4, math.log(100.0), seed=rng)
        for _ in range(5):
            u = rng.standard_normal(4)
            u /= np.linalg.norm(u)
            assert radius_vector_value(cloud, u) <= support_value(cloud, u) + 1e-12


@pytest.mark.slow
def test_volume_ratio_at_critical_volume_scaling():
    params = ModelParams.volume_critical(8, 1.0)
    estimate = volume_ratio_estimate(8, params.L, n_dirs=16, n_clouds=40, seed=71)
    assert 0.1 < estimate.mean < 0.7
