import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tessella.lattice import (
    CoordinateError, GridKind, Isometry, apply_isometry, cell_neighbors, cell_polygon, compose,
    get_lattice, invert, point_group,
)

GRIDS = list(GridKind)


def random_cell(grid, rng, span=30):
    lat = get_lattice(grid)
    a, b = rng.randint(-span, span), rng.randint(-span, span)
    return lat.public(a, b, rng.randrange(lat.K))


def random_iso(grid, rng, span=10):
    lat = get_lattice(grid)
    return Isometry(rng.randrange(lat.order), (rng.randint(-span, span), rng.randint(-span, span)))


def area(poly):
    return abs(sum(poly[i][0] * poly[i - 1][1] - poly[i - 1][0] * poly[i][1] for i in range(len(poly)))) / 2


def test_square_neighbors():
    assert cell_neighbors("square", (0, 0), "edge") == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    moore = cell_neighbors("square", (0, 0), "vertex")
    assert len(moore) == 8 and (1, 1) in moore


def test_triangle_up_cell_has_three_down_neighbors():
    nb = cell_neighbors("tri", (2, -1, 0), "edge")
    assert len(nb) == 3
    assert all(c[2] == 1 for c in nb)


def test_bad_mode_and_bad_cell():
    with pytest.raises(ValueError):
        cell_neighbors("square", (0, 0), "diagonal")
    with pytest.raises(CoordinateError):
        cell_neighbors("kite", (0, 0, 6), "edge")
    with pytest.raises(CoordinateError):
        cell_neighbors("square", (0, 0, 1), "edge")
    with pytest.raises(CoordinateError):
        cell_neighbors("hex", (0.5, 0), "edge")


def test_simple_isometries():
    assert apply_isometry("square", Isometry(0, (0, 0)), (3, 5)) == (3, 5)
    assert apply_isometry("square", Isometry(1, (0, 0)), (1, 0)) == (0, 1)


@pytest.mark.parametrize("grid", GRIDS)
def test_inverse_round_trip(grid):
    rng = random.Random(7)
    for _ in range(100):
        g, c = random_iso(grid, rng), random_cell(grid, rng)
        assert apply_isometry(grid, g, apply_isometry(grid, invert(grid, g), c)) == c


@pytest.mark.parametrize("grid,one_sided,size", [
    ("square", False, 8), ("kite", False, 12), ("hex", True, 6), ("hex", False, 12),
    ("tri", False, 12), ("square", True, 4),
])
def test_point_group_orders(grid, one_sided, size):
    group = point_group(grid, one_sided)
    assert len(group) == size
    assert group[0] == Isometry(0, (0, 0))


def test_cell_polygon_square():
    assert cell_polygon("square", (0, 0)) == [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def test_triangle_areas_agree():
    assert math.isclose(area(cell_polygon("tri", (0, 0, 0))), area(cell_polygon("tri", (0, 0, 1))))


def test_six_kites_make_a_hexagon():
    kites = [cell_polygon("kite", (0, 0, k)) for k in range(6)]
    verts = {(round(x, 9), round(y, 9)) for poly in kites for x, y in poly}
    center = kites[0][0]
    far = [v for v in verts if math.dist(v, center) > max(math.dist(kites[0][0], p) for p in kites[0][1:2]) + 1e-6]
    assert len(far) == 6
    hexagon_area = 3 * math.sqrt(3) / 2 * math.dist(center, far[0]) ** 2
    assert abs(sum(area(k) for k in kites) - hexagon_area) < 1e-9


@pytest.mark.parametrize("grid", GRIDS)
def test_polygons_counterclockwise(grid):
    rng = random.Random(3)
    for _ in range(20):
        poly = cell_polygon(grid, random_cell(grid, rng))
        signed = sum(poly[i - 1][0] * poly[i][1] - poly[i][0] * poly[i - 1][1] for i in range(len(poly)))
        assert signed > 0


@pytest.mark.parametrize("grid", GRIDS)
def test_group_closure(grid):
    rng = random.Random(11)
    lat = get_lattice(grid)
    for _ in range(1000):
        g, h = random_iso(grid, rng), random_iso(grid, rng)
        c = random_cell(grid, rng)
        gh = compose(grid, g, h)
        assert 0 <= gh.point < lat.order
        assert apply_isometry(grid, gh, c) == apply_isometry(grid, g, apply_isometry(grid, h, c))


@pytest.mark.parametrize("grid", GRIDS)
@pytest.mark.parametrize("mode", ["edge", "vertex"])
def test_adjacency_preserved(grid, mode):
    rng = random.Random(5)
    lat = get_lattice(grid)
    for _ in range(30):
        c = random_cell(grid, rng)
        nb = cell_neighbors(grid, c, mode)
        for i in range(lat.order):
            g = Isometry(i, (rng.randint(-5, 5), rng.randint(-5, 5)))
            moved = {apply_isometry(grid, g, d) for d in nb}
            assert moved == cell_neighbors(grid, apply_isometry(grid, g, c), mode)


@pytest.mark.parametrize("grid", GRIDS)
def test_edge_neighbors_within_vertex_neighbors(grid):
    rng = random.Random(9)
    for _ in range(100):
        c = random_cell(grid, rng)
        assert cell_neighbors(grid, c, "edge") <= cell_neighbors(grid, c, "vertex")


def _shared(p, q, tol=1e-9):
    return [u for u in p if any(math.dist(u, v) < tol for v in q)]


@pytest.mark.parametrize("grid", GRIDS)
def test_geometric_consistency(grid):
    rng = random.Random(13)
    for _ in range(40):
        c = random_cell(grid, rng)
        poly = cell_polygon(grid, c)
        for d in cell_neighbors(grid, c, "edge"):
            assert len(_shared(poly, cell_polygon(grid, d))) >= 2
        for d in cell_neighbors(grid, c, "vertex") - cell_neighbors(grid, c, "edge"):
            assert len(_shared(poly, cell_polygon(grid, d))) == 1


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(GRIDS), st.integers(-40, 40), st.integers(-40, 40), st.integers(0, 11),
       st.integers(0, 23), st.integers(-9, 9), st.integers(-9, 9))
def test_isometries_are_bijective_and_adjacency_preserving(grid, a, b, s, i, tx, ty):
    lat = get_lattice(grid)
    c = lat.public(a, b, s % lat.K)
    g = Isometry(i % lat.order, (tx, ty))
    img = apply_isometry(grid, g, c)
    assert apply_isometry(grid, invert(grid, g), img) == c
    assert {apply_isometry(grid, g, d) for d in cell_neighbors(grid, c, "vertex")} == \
        cell_neighbors(grid, img, "vertex")
