import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import alphas, ball_points
from cat1prox import geometry as geo
from cat1prox import diagnostics as dg
from cat1prox.errors import DegenerateGeodesicError, InvalidInputError

E1, E2, E3 = np.eye(3)


def test_distance_trivial():
    x = geo.make_point([0.3, -0.2, 0.9])
    assert geo.distance(x, x) == 0.0
    assert geo.distance(E1, E2) == pytest.approx(math.pi / 2, abs=1e-15)
    y = np.array([math.cos(0.3), math.sin(0.3), 0.0])
    assert geo.distance(E1, y) == pytest.approx(0.3, abs=1e-15)


def test_distance_matches_arccos_away_from_zero(rng):
    x = rng.standard_normal((200, 3))
    y = rng.standard_normal((200, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    for a, b in zip(x, y):
        assert geo.distance(a, b) == pytest.approx(math.acos(np.clip(a @ b, -1, 1)), abs=1e-12)


def test_distance_errors():
    with pytest.raises(InvalidInputError):
        geo.distance(E1, np.array([1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        geo.distance(E1, np.array([2.0, 0.0, 0.0]))
    with pytest.raises(InvalidInputError):
        geo.make_point([0.0, 0.0])
    with pytest.raises(InvalidInputError):
        geo.make_point([1.0])


def test_interpolate_endpoints_and_midpoint():
    x, y = E1, E2
    assert np.array_equal(geo.interpolate(x, y, 1.0), x)
    assert np.array_equal(geo.interpolate(x, y, 0.0), y)
    np.testing.assert_allclose(geo.interpolate(x, y, 0.5), [2**-0.5, 2**-0.5, 0.0], atol=1e-15)


def test_interpolate_errors():
    with pytest.raises(DegenerateGeodesicError):
        geo.interpolate(E1, -E1, 0.5)
    with pytest.raises(InvalidInputError):
        geo.interpolate(E1, E2, 1.5)


def test_log_exp_examples():
    assert np.array_equal(geo.log_map(E1, E1), np.zeros(3))
    np.testing.assert_allclose(geo.log_map(E1, E2), [0, math.pi / 2, 0], atol=1e-15)
    np.testing.assert_allclose(geo.exp_map(E1, [0, math.pi / 2, 0]), E2, atol=1e-15)
    assert np.array_equal(geo.exp_map(E1, np.zeros(3)), E1)
    with pytest.raises(InvalidInputError):
        geo.exp_map(E1, [0.1, 0.2, 0.0])
    with pytest.raises(DegenerateGeodesicError):
        geo.log_map(E1, -E1)


def test_contains(space):
    assert space.contains(space.pole)
    assert not space.contains(geo.offset_point(space.pole, 2 * space.radius))
    assert space.contains(geo.offset_point(space.pole, space.radius))


def test_space_validation():
    with pytest.raises(InvalidInputError):
        geo.AdmissibleSpace(E3, math.pi / 4)
    with pytest.raises(InvalidInputError):
        geo.AdmissibleSpace(E3, 0.0)
    with pytest.raises(InvalidInputError):
        geo.AdmissibleSpace(E3, 0.5, ambient_dim=4)
    s = geo.AdmissibleSpace.default(5)
    assert s.ambient_dim == 5 and s.radius == geo.DEFAULT_RADIUS


def test_project_to_ball_examples(space):
    assert np.array_equal(space.project(space.pole), space.pole)
    p = geo.offset_point(space.pole, 2 * space.radius, 0.7)
    q = space.project(p)
    assert geo.distance(space.pole, q) == pytest.approx(space.radius, abs=1e-14)
    assert geo.distance(q, p) == pytest.approx(space.radius, abs=1e-14)
    with pytest.raises(DegenerateGeodesicError):
        space.project(-space.pole)


def test_project_to_ball_nearest_point_vs_grid(space, rng):
    # 50 outside points; nearest point of the ball found by an independent zooming grid
    for _ in range(50):
        d = rng.uniform(space.radius, 2.5)
        p = oracles.cap_point(d, rng.uniform(0, 2 * math.pi))
        best = oracles.grid_argmin(lambda pts: np.linalg.norm(pts - p, axis=1), levels=4)
        assert geo.distance(space.project(p), best) < 1e-6


@given(ball_points(), ball_points(), ball_points())
def test_triangle_inequality(x, y, z):
    assert geo.distance(x, z) <= geo.distance(x, y) + geo.distance(y, z) + 1e-12


@given(ball_points(), ball_points(), ball_points(), alphas)
def test_cat1_inequality(x1, x2, x3, a):
    assert dg.cat1_residual(x1, x2, x3, a) >= -1e-10


@given(ball_points(), ball_points(), ball_points(), alphas)
def test_sine_weighted_inequality(x1, x2, x3, a):
    assert dg.ks_residual(x1, x2, x3, a) >= -1e-10


@given(ball_points(), ball_points(), ball_points(), alphas)
def test_anchor_lemma_inequality(x1, x2, x3, a):
    assert dg.halpern_lemma_residual(x1, x2, x3, a) >= -1e-10
    assert dg.halpern_lemma_residual(x1, x1, x3, a) >= -1e-10


@given(ball_points(), ball_points(), alphas)
def test_interpolate_splits_distance(x, y, a):
    q = geo.interpolate(x, y, a)
    d = geo.distance(x, y)
    assert abs(geo.distance(x, q) - (1 - a) * d) <= 1e-10
    assert abs(geo.distance(q, y) - a * d) <= 1e-10
    assert abs(np.linalg.norm(q) - 1) <= 1e-12
    np.testing.assert_allclose(q, oracles.slerp(x, y, a), atol=1e-12)


@given(ball_points(), ball_points())
def test_log_exp_roundtrip(b, t):
    v = geo.log_map(b, t)
    assert abs(np.dot(v, b)) <= 1e-12
    assert np.linalg.norm(v) == pytest.approx(geo.distance(b, t), abs=1e-12)
    assert geo.distance(geo.exp_map(b, v), t) <= 1e-10


@given(ball_points(), ball_points())
def test_admissibility(x, y):
    assert geo.distance(x, y) < math.pi / 2


def test_log_exp_roundtrip_100_pairs(space, rng):
    pts = geo.sample_points(space, rng, 200)
    for b, t in zip(pts[:100], pts[100:]):
        assert geo.distance(geo.exp_map(b, geo.log_map(b, t)), t) <= 1e-10


def test_sample_points_inside(space, rng):
    pts = geo.sample_points(space, rng, 2000)
    assert np.all(geo.distances_to(pts, space.pole) <= space.radius + 1e-12)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-14)


def test_cap_grid_covers_cap(space, rng):
    grid = geo.cap_grid(space.pole, space.radius, 0.02)
    assert np.all(geo.distances_to(grid, space.pole) <= space.radius + 1e-12)
    # every random point has a grid node within ~one spacing
    for p in geo.sample_points(space, rng, 200):
        assert geo.distances_to(grid, p).min() < 0.02
    with pytest.raises(NotImplementedError):
        geo.cap_grid(np.eye(4)[0], 0.3, 0.05)


def test_pattern_search_finds_interior_minimum(space):
    z = oracles.cap_point(0.3, 1.0)
    p = geo.pattern_search(lambda y: float(np.linalg.norm(y - z)), space.pole, space, step=0.05)
    assert geo.distance(p, z) < 1e-9


@given(st.floats(0.0, math.pi - 1e-3), st.floats(0, 2 * math.pi))
def test_offset_point_distance(d, ang):
    p = geo.offset_point(E3, d, ang)
    assert geo.distance(E3, p) == pytest.approx(d, abs=1e-12)


def test_segment():
    s = geo.segment(E1, E2)
    assert s.length == pytest.approx(math.pi / 2)
    np.testing.assert_allclose(s.point_at(math.pi / 4), [2**-0.5, 2**-0.5, 0], atol=1e-15)
    with pytest.raises(InvalidInputError):
        s.point_at(2.0)
