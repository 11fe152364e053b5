"""Geometry: projections, intersections, and the Monte-Carlo area oracles."""

import math

import numpy as np
import pytest

from shadowdof.geometry import (
    ConvexPolygon,
    Direction,
    Disc,
    PlanarPolygon,
    Segment,
    ShadowInterval,
    ShadowPolygon,
    Sphere,
    circle_intersection_area,
    convex_polygon_intersection,
    interval_intersection,
    interval_union_length,
    mesh_plate,
    polygon_area,
    polygon_union_area,
    project_shape_2d,
    project_shape_3d,
)
from oracles import mc_lens_area, mc_polygon_intersection_area, random_convex_polygon

UNIT_SQUARE = ShadowPolygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


def square_at(x0, y0, side=1.0):
    return ShadowPolygon(np.array([
        [x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]]))


# ---------------------------------------------------------------------------
# Projections


def test_segment_projection_edge_on_and_broadside():
    seg = Segment([0.0, 0.0], [1.0, 0.0])
    # direction along the segment: shadow degenerates to a point
    assert project_shape_2d(seg, Direction(0.0)).length == pytest.approx(0.0, abs=1e-15)
    # broadside illumination: full length
    assert project_shape_2d(seg, Direction(math.pi / 2)).length == pytest.approx(1.0)


def test_disc_projection_any_direction():
    disc = Disc([0.0, 0.0], 0.7)
    for phi in np.linspace(0, 2 * math.pi, 17):
        iv = project_shape_2d(disc, Direction(float(phi)))
        assert iv.lo == pytest.approx(-0.7)
        assert iv.hi == pytest.approx(0.7)


def test_diagonal_segment_projection():
    seg = Segment([0.0, 0.0], [1.0, 1.0])
    assert project_shape_2d(seg, Direction(0.0)).length == pytest.approx(1.0)


def test_sphere_shadow_is_polygonized_disc():
    sph = Sphere([0.3, -0.2, 1.4], 0.9)
    shadow = project_shape_3d(sph, Direction(0.7, theta=1.1))
    target = math.pi * 0.9**2
    assert shadow.area == pytest.approx(target, rel=2e-4)
    # refinement converges to the disc area
    fine = project_shape_3d(sph, Direction(0.7, theta=1.1), n_arc=4096)
    assert fine.area == pytest.approx(target, rel=1e-6)


def test_plate_shadow_normal_and_edge_on():
    plate = PlanarPolygon(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [0.0, 0.0, 1.0])
    assert project_shape_3d(plate, Direction(0.0, theta=0.0)).area == pytest.approx(1.0)
    edge_on = project_shape_3d(plate, Direction(0.0, theta=math.pi / 2))
    assert edge_on.is_empty
    assert edge_on.area == 0.0


def test_projection_direction_sign_invariance():
    rng = np.random.default_rng(5)
    shapes2 = [Segment([0, 0], [1, 0.4]), Disc([0.5, -1.0], 0.3),
               ConvexPolygon(random_convex_polygon(rng))]
    for s in shapes2:
        for phi in rng.random(8) * 2 * math.pi:
            a = project_shape_2d(s, Direction(float(phi)))
            b = project_shape_2d(s, Direction(float((phi + math.pi) % (2 * math.pi))))
            assert a.length == pytest.approx(b.length, abs=1e-12)
    sph = Sphere([0.2, 0.1, 0.9], 0.5)
    plate = PlanarPolygon([[0, 0, 0], [1, 0, 0], [1, 1, 0.0], [0, 1, 0]], [0, 0, 1.0])
    for s3 in (sph, plate):
        for _ in range(8):
            theta = float(rng.random() * math.pi)
            phi = float(rng.random() * 2 * math.pi)
            a = project_shape_3d(s3, Direction(phi, theta=theta))
            b = project_shape_3d(
                s3, Direction((phi + math.pi) % (2 * math.pi), theta=math.pi - theta))
            assert a.area == pytest.approx(b.area, abs=1e-10)


# ---------------------------------------------------------------------------
# Interval intersection


def test_interval_intersections():
    iv = lambda a, b: ShadowInterval(a, b)
    assert interval_intersection(iv(0, 1), iv(0.5, 2)).length == pytest.approx(0.5)
    touching = interval_intersection(iv(0, 1), iv(1, 2))
    assert touching.length == 0.0 and touching.is_empty
    assert interval_intersection(iv(0, 2), iv(0.5, 1)).length == pytest.approx(0.5)


def test_interval_union_length():
    iv = lambda a, b: ShadowInterval(a, b)
    assert interval_union_length([iv(0, 1), iv(0.5, 2), iv(3, 4)]) == pytest.approx(3.0)
    assert interval_union_length([]) == 0.0


# ---------------------------------------------------------------------------
# Polygon intersection


def test_identical_squares():
    out = convex_polygon_intersection(UNIT_SQUARE, UNIT_SQUARE)
    assert out.area == pytest.approx(1.0, rel=1e-12)


def test_offset_squares():
    out = convex_polygon_intersection(UNIT_SQUARE, square_at(0.5, 0.5))
    assert out.area == pytest.approx(0.25, rel=1e-12)


def test_touching_squares_are_empty():
    out = convex_polygon_intersection(UNIT_SQUARE, square_at(1.0, 0.0))
    assert out.is_empty


def test_random_polygon_pair_against_monte_carlo():
    rng = np.random.default_rng(42)
    va = random_convex_polygon(rng, scale=2.0)
    vb = random_convex_polygon(rng, scale=2.0, center=(0.3, -0.2))
    area = convex_polygon_intersection(ShadowPolygon(va), ShadowPolygon(vb)).area
    est, sigma = mc_polygon_intersection_area(va, vb, 1_000_000, rng)
    assert abs(area - est) < 3 * sigma + 1e-12


def test_polygon_intersection_commutative_idempotent():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = ShadowPolygon(random_convex_polygon(rng, scale=1.5))
        b = ShadowPolygon(random_convex_polygon(rng, scale=1.5, center=(0.2, 0.1)))
        ab = convex_polygon_intersection(a, b).area
        ba = convex_polygon_intersection(b, a).area
        assert ab == pytest.approx(ba, rel=1e-10, abs=1e-14)
        aa = convex_polygon_intersection(a, a).area
        assert aa == pytest.approx(a.area, rel=1e-12)
        # never exceeds either operand
        assert ab <= min(a.area, b.area) + 1e-12


def test_polygon_union_area_inclusion_exclusion():
    # two half-overlapping squares: union = 2 - 0.5
    parts = [UNIT_SQUARE, square_at(0.5, 0.0)]
    assert polygon_union_area(parts) == pytest.approx(1.5, rel=1e-12)
    # three stacked squares overlapping pairwise and triply
    parts = [UNIT_SQUARE, square_at(0.5, 0.0), square_at(0.25, 0.0)]
    assert polygon_union_area(parts) == pytest.approx(1.5, rel=1e-12)
    # rasterization path (>8 parts): grid of touching squares
    many = [square_at(0.9 * i, 0.0) for i in range(9)]
    exact = 0.9 * 9 + 0.1
    assert polygon_union_area(many) == pytest.approx(exact, rel=5e-3)


# ---------------------------------------------------------------------------
# Disc lens area


def test_lens_coincident_and_tangent():
    assert circle_intersection_area(1.3, 1.3, 0.0) == pytest.approx(math.pi * 1.3**2)
    assert circle_intersection_area(1.0, 0.5, 1.5) == 0.0
    # containment
    assert circle_intersection_area(2.0, 0.5, 1.0) == pytest.approx(math.pi * 0.25)


def test_lens_unit_discs_frozen_value_and_oracle():
    # analytic lens for a1 = a2 = 1, d = 1
    expected = 2.0 * (math.acos(0.5) - 0.5 * math.sqrt(0.75))
    value = circle_intersection_area(1.0, 1.0, 1.0)
    assert value == pytest.approx(expected, rel=1e-14)
    assert value == pytest.approx(1.2283696986087573, rel=1e-12)
    rng = np.random.default_rng(7)
    est, sigma = mc_lens_area(1.0, 1.0, 1.0, 10_000_000, rng)
    assert abs(value - est) < 3 * sigma


def test_lens_continuity_at_regime_boundaries():
    for a1, a2 in [(1.0, 1.0), (1.5, 0.4)]:
        for d0 in (abs(a1 - a2), a1 + a2):
            if d0 == 0.0:
                continue
            below = circle_intersection_area(a1, a2, max(d0 - 1e-9, 0.0))
            above = circle_intersection_area(a1, a2, d0 + 1e-9)
            assert abs(below - above) < 1e-6


def test_lens_monotone_in_distance():
    ds = np.linspace(0.0, 2.5, 40)
    vals = [circle_intersection_area(1.0, 0.8, float(d)) for d in ds]
    assert all(vals[i] >= vals[i + 1] - 1e-12 for i in range(len(vals) - 1))


# ---------------------------------------------------------------------------
# Construction validation


def test_shape_validation():
    with pytest.raises(ValueError):
        Segment([0, 0], [0, 0])
    with pytest.raises(ValueError):
        Disc([0, 0], 0.0)
    with pytest.raises(ValueError):
        ConvexPolygon([[0, 0], [1, 0], [2, 0]])  # collinear
    with pytest.raises(ValueError):
        ConvexPolygon([[0, 0], [0, 1], [1, 1], [1, 0]])  # CW order
    with pytest.raises(ValueError):
        Sphere([0, 0, 0], -1.0)
    with pytest.raises(ValueError):
        PlanarPolygon([[0, 0, 0], [1, 0, 0], [1, 1, 0.3], [0, 1, 0]], [0, 0, 1])


def test_mesh_plate_area():
    mesh = mesh_plate([0, 0, 0], [1, 0, 0], [0, 1, 0], 0.25)
    assert mesh.areas.sum() == pytest.approx(1.0, rel=1e-12)
    assert mesh.crossings == 1.0


def test_shoelace_orientation():
    assert polygon_area(UNIT_SQUARE.vertices) == pytest.approx(1.0)
    assert polygon_area(UNIT_SQUARE.vertices[::-1]) == pytest.approx(-1.0)
