import math
import random

import numpy as np
import pytest

import oracles
from gmtkit.errors import DegenerateCell, DimensionError, InvalidInput
from gmtkit.geometry import (
    WINDOW_ALL,
    AffineMap,
    Plane,
    Window,
    clipped_measure,
    grassmann_dist,
    is_degenerate,
    simplex_diameter,
    simplex_measure,
    tangent_plane,
)


def test_simplex_measure_known_values():
    assert simplex_measure([[0.0, 0.0]]) == 1.0
    assert simplex_measure([[0, 0], [3, 4]]) == 5.0
    assert simplex_measure([[0, 0], [4, 0], [0, 3]]) == 6.0
    # unit right tetrahedron in 3-space
    tet = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert math.isclose(simplex_measure(tet), 1.0 / 6.0, rel_tol=1e-12)
    # triangle living in 3-space keeps its 2d area
    tri = [[0, 0, 0], [1, 0, 1], [0, 1, 1]]
    assert math.isclose(simplex_measure(tri), oracles.measure(tri), rel_tol=1e-12)


def test_simplex_measure_random_against_oracle():
    rng = np.random.default_rng(31)
    for _ in range(200):
        n = rng.integers(2, 4)
        m = rng.integers(1, n + 1)
        pts = rng.normal(size=(m + 1, n))
        assert math.isclose(
            simplex_measure(pts), oracles.measure(pts), rel_tol=1e-9, abs_tol=1e-12
        )


def test_simplex_diameter_and_degeneracy():
    assert simplex_diameter([[0, 0], [3, 4], [0, 1]]) == 5.0
    assert is_degenerate([[0, 0], [1, 1], [2, 2]])
    assert not is_degenerate([[0, 0], [1, 1], [2, 0]])
    with pytest.raises(DegenerateCell):
        tangent_plane([[0, 0], [1, 1], [2, 2]])


def test_tangent_plane_projects_onto_itself():
    seg = tangent_plane([[0.0, 0.0], [2.0, 1.0]])
    d = np.array([2.0, 1.0]) / math.sqrt(5.0)
    assert np.allclose(seg.projector() @ d, d)
    tri = tangent_plane([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert np.allclose(tri.projector() @ np.array([0, 0, 1.0]), 0.0)


def test_grassmann_orthogonal_lines():
    s = Plane.from_span([[1.0, 0.0]])
    t = Plane.from_span([[0.0, 1.0]])
    assert math.isclose(grassmann_dist(s, t), math.sqrt(2.0), rel_tol=1e-12)
    assert grassmann_dist(s, s) == 0.0
    with pytest.raises(DimensionError):
        grassmann_dist(s, Plane.from_span([[1.0, 0.0, 0.0]]))


def test_window_membership():
    ball = Window.ball([0.0, 0.0], 1.0)
    assert ball.contains(np.array([0.5, 0.5]))
    assert not ball.contains(np.array([1.0, 0.0]))  # open
    box = Window.box([0.0, 0.0], [1.0, 2.0])
    assert box.contains(np.array([0.5, 1.0]))
    assert not box.contains(np.array([0.0, 1.0]))
    pts = np.array([[0.1, 0.1], [5.0, 5.0]])
    assert list(ball.contains_many(pts)) == [True, False]
    assert WINDOW_ALL.contains(np.array([1e9, -1e9]))
    with pytest.raises(InvalidInput):
        Window.ball([0.0, 0.0], 0.0)
    with pytest.raises(InvalidInput):
        Window.box([0.0, 0.0], [0.0, 1.0])


def test_window_labels_round_trip_floats():
    w = Window.ball([0.5, 0.0], 0.3)
    assert w.label() == "ball:0.5,0.0,0.3"
    assert Window.box([0, 0], [1, 2]).label() == "box:0.0,0.0,1.0,2.0"
    assert WINDOW_ALL.label() == "all"


def test_affine_map_validation_and_apply():
    f = AffineMap(np.array([[1.0, 0.0]]), np.array([0.0]))
    assert f.apply(np.array([[2.0, 7.0]]))[0, 0] == 2.0
    g = AffineMap.dilation([1.0, 1.0], 0.5)
    assert np.allclose(g.apply(np.array([[2.0, 1.0]])), [[2.0, 0.0]])
    with pytest.raises(InvalidInput):
        AffineMap(np.array([[np.inf, 0.0]]), np.array([0.0]))
    with pytest.raises(DimensionError):
        AffineMap(np.eye(4), np.zeros(4))
    with pytest.raises(InvalidInput):
        AffineMap.dilation([0.0, 0.0], -1.0)


def test_clipped_segment_matches_quadratic_oracle():
    rng = np.random.default_rng(5)
    for _ in range(300):
        a, b = rng.normal(size=(2, 2))
        c = rng.normal(size=2) * 0.5
        r = 0.2 + rng.random()
        got = clipped_measure([a, b], Window.ball(c, r))
        want = oracles.segment_ball_length(a, b, c, r)
        assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12)


def test_clipped_segment_box():
    w = Window.box([0.0, 0.0], [1.0, 1.0])
    assert math.isclose(clipped_measure([[-1, 0.5], [2, 0.5]], w), 1.0, rel_tol=1e-12)
    assert clipped_measure([[-1, 2], [2, 2]], w) == 0.0


def test_clipped_point_is_indicator():
    w = Window.ball([0.0, 0.0], 1.0)
    assert clipped_measure([[0.5, 0.0]], w) == 1.0
    assert clipped_measure([[2.0, 0.0]], w) == 0.0


def test_clipped_triangle_exact_cases():
    # triangle fully inside
    w = Window.ball([0.0, 0.0], 10.0)
    tri = [[0, 0], [1, 0], [0, 1]]
    assert math.isclose(clipped_measure(tri, w), 0.5, rel_tol=1e-12)
    # ball fully inside a big triangle: area is pi r^2
    big = [[-50.0, -50.0], [50.0, -50.0], [0.0, 80.0]]
    got = clipped_measure(big, Window.ball([0.0, 0.0], 1.0))
    assert math.isclose(got, math.pi, rel_tol=1e-12)
    # half-plane cut through the middle of the ball
    half = [[-50.0, 0.0], [50.0, 0.0], [0.0, 80.0]]
    got = clipped_measure(half, Window.ball([0.0, 0.0], 1.0))
    assert math.isclose(got, math.pi / 2.0, rel_tol=1e-12)


def test_clipped_triangle_matches_monte_carlo():
    rng = random.Random(11)
    for k in range(8):
        tri = [[rng.uniform(-1, 1), rng.uniform(-1, 1)] for _ in range(3)]
        if oracles.measure(tri) < 0.05:
            continue
        c = [rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)]
        r = rng.uniform(0.3, 1.2)
        got = clipped_measure(tri, Window.ball(c, r))
        want = oracles.triangle_ball_area_mc(tri, c, r, seed=100 + k)
        assert abs(got - want) < 0.01


def test_clipped_measure_rejects_high_dimension():
    tet = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    with pytest.raises(DimensionError):
        clipped_measure(tet, Window.ball([0.0, 0.0, 0.0], 1.0))
