"""Certificate checkers kept apart from the search code.

Everything here works on public cell tuples and the lattice geometry only;
nothing is imported from the search engines.  The disk test uses a
complement flood fill plus an angular scan around each corner, a different
route from the Euler-characteristic test used during search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import Isometry, apply_isometry, cell_neighbors, get_lattice


@dataclass
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _triple(lat, c):
    return lat.check(c)


# -- disk test -------------------------------------------------------------

def _edge_connected(grid, cells: set) -> bool:
    if not cells:
        return False
    start = min(cells)
    seen = {start}
    todo = [start]
    while todo:
        c = todo.pop()
        for n in cell_neighbors(grid, c, "edge"):
            if n in cells and n not in seen:
                seen.add(n)
                todo.append(n)
    return len(seen) == len(cells)


def _holes(grid, cells: set) -> list:
    """Complement cells enclosed by ``cells`` (flood fill from a bounding box)."""
    lat = get_lattice(grid)
    trip = [_triple(lat, c) for c in cells]
    a0 = min(t[0] for t in trip) - 2
    a1 = max(t[0] for t in trip) + 2
    b0 = min(t[1] for t in trip) - 2
    b1 = max(t[1] for t in trip) + 2
    box = set()
    border = []
    for a in range(a0, a1 + 1):
        for b in range(b0, b1 + 1):
            for s in range(lat.K):
                c = lat.public(a, b, s)
                if c in cells:
                    continue
                box.add(c)
                if a in (a0, a1) or b in (b0, b1):
                    border.append(c)
    seen = set(border)
    todo = list(border)
    while todo:
        c = todo.pop()
        for n in cell_neighbors(grid, c, "edge"):
            if n in box and n not in seen:
                seen.add(n)
                todo.append(n)
    return sorted(box - seen)


def _pinches(grid, cells: set) -> list:
    """Corners where the cells around them form more than one arc."""
    lat = get_lattice(grid)
    fan: dict = {}
    around = set(cells)
    for c in cells:
        around |= cell_neighbors(grid, c, "vertex")
    polys = {}
    for c in around:
        poly = lat.frame_polygon(*_triple(lat, c))
        polys[c] = poly
        for v in poly:
            fan.setdefault(v, []).append(c)
    bad = []
    for v, members in fan.items():
        if not any(c in cells for c in members):
            continue
        if all(c in cells for c in members):
            continue

        def angle(c):
            poly = polys[c]
            x = sum(p[0] for p in poly) / len(poly) - v[0]
            y = sum(p[1] for p in poly) / len(poly) - v[1]
            return math.atan2(y, x)

        ring = [c in cells for c in sorted(members, key=angle)]
        arcs = sum(1 for i in range(len(ring)) if ring[i] and not ring[i - 1])
        if arcs > 1:
            bad.append(v)
    return sorted(bad)


def disk_report(grid, cells) -> Verdict:
    cells = set(cells)
    if not cells:
        return Verdict(False, "empty cell set")
    if not _edge_connected(grid, cells):
        return Verdict(False, "not edge-connected")
    holes = _holes(grid, cells)
    if holes:
        return Verdict(False, f"hole containing cell {holes[0]}")
    pin = _pinches(grid, cells)
    if pin:
        return Verdict(False, f"pinch point at frame vertex {pin[0]}")
    return Verdict(True)


# -- corona certificates ---------------------------------------------------

def _image(grid, shape_cells, g):
    return frozenset(apply_isometry(grid, g, c) for c in shape_cells)


def _touch(grid, a: set, b: set, mode: str) -> bool:
    for c in a:
        for n in cell_neighbors(grid, c, mode):
            if n in b:
                return True
    return False


def verify_patch(shape, patch, adjacency_mode: str = "vertex", allow_holes: bool = False) -> Verdict:
    """Check an n-patch certificate against the recursive patch definition."""
    grid = shape.grid
    lat = get_lattice(grid)
    places = patch.placements
    coronas = patch.corona
    if not places:
        return Verdict(False, "empty patch")
    if coronas is None or len(coronas) != len(places):
        return Verdict(False, "corona indices missing")
    if sorted(coronas).count(0) != 1:
        return Verdict(False, "corona 0 must hold exactly one copy")
    n = max(coronas)
    if set(coronas) != set(range(n + 1)):
        return Verdict(False, "corona indices are not contiguous")
    layers = [set() for _ in range(n + 1)]
    realized = []
    for p, k in zip(places, coronas):
        img = _image(grid, shape.cells, p.g)
        if img != frozenset(p.cells):
            return Verdict(False, f"placement {p.g} does not match its cells")
        realized.append((img, k))
    seen: dict = {}
    for idx, (img, k) in enumerate(realized):
        for c in img:
            if c in seen:
                return Verdict(False, f"copies {seen[c]} and {idx} overlap at {c}")
            seen[c] = idx
        layers[k] |= img
    # translation bound for candidate placements
    extent = [_triple(lat, c) for c in shape.cells]
    diam = max(max(t[0] for t in extent) - min(t[0] for t in extent),
               max(t[1] for t in extent) - min(t[1] for t in extent))
    bound = (n + 1) * (diam + 2)
    for p in places:
        if max(abs(p.g.t[0]), abs(p.g.t[1])) > bound:
            return Verdict(False, f"placement {p.g} lies outside the candidate radius {bound}")
    inner = set(layers[0])
    for k in range(1, n + 1):
        older = set().union(*layers[:k - 1]) if k >= 2 else set()
        prev = layers[k - 1]
        for img, kk in realized:
            if kk != k:
                continue
            if not _touch(grid, img, prev, adjacency_mode):
                return Verdict(False, f"a corona-{k} copy does not touch corona {k - 1}")
            if older and _touch(grid, img, older, "vertex"):
                return Verdict(False, f"a corona-{k} copy touches corona {k - 2} or below")
        outer = inner | layers[k]
        for c in inner:
            for nb in cell_neighbors(grid, c, "vertex"):
                if nb not in outer:
                    return Verdict(False, f"cell {nb} next to the {k - 1}-patch is uncovered")
        inner = outer
    if not allow_holes:
        acc = set()
        for k in range(n + 1):
            acc |= layers[k]
            d = disk_report(grid, acc)
            if not d:
                return Verdict(False, f"{k}-patch is not a disk: {d.reason}")
    return Verdict(True)


# -- periodic certificates -------------------------------------------------

def _hnf(t1, t2):
    """Basis (A, 0), (B, C) of the lattice spanned by t1, t2 with 0 <= B < A."""
    (x1, y1), (x2, y2) = t1, t2
    # extended gcd on the second coordinates, carrying the first along
    while y2 != 0:
        q = y1 // y2
        x1, y1, x2, y2 = x2, y2, x1 - q * x2, y1 - q * y2
    if y1 < 0:
        x1, y1 = -x1, -y1
    A = abs(x2)
    C = y1
    if A == 0 or C == 0:
        return None
    return A, x1 % A, C


def _reduce(basis, x, y):
    A, B, C = basis
    k = y // C
    x -= k * B
    y -= k * C
    return x % A, y


def verify_periodic_report(cert, shape=None) -> Verdict:
    """Exact fundamental-domain check of a periodic certificate.

    Copies of ``cert.patch`` translated by the lattice spanned by ``t1`` and
    ``t2`` must cover every cell exactly once, and the tiles must fall into
    at most ``cert.classes`` orbits under the symmetries of the tiling.
    """
    t1, t2 = tuple(cert.t1), tuple(cert.t2)
    det = t1[0] * t2[1] - t1[1] * t2[0]
    if det == 0:
        return Verdict(False, "translation vectors are dependent")
    places = cert.patch.placements
    if not places:
        return Verdict(False, "empty patch")
    base = shape if shape is not None else places[0].base
    grid = base.grid
    lat = get_lattice(grid)
    basis = _hnf(t1, t2)
    if basis is None or basis[0] * basis[2] != abs(det):
        return Verdict(False, "could not reduce the translation lattice")

    def cls(c):
        a, b, s = _triple(lat, c)
        x, y = _reduce(basis, a, b)
        return x, y, s

    owner: dict = {}
    tiles = []
    for idx, p in enumerate(places):
        img = _image(grid, base.cells, p.g)
        if img != frozenset(p.cells):
            return Verdict(False, f"placement {idx} does not match its isometry")
        tiles.append(img)
        for c in img:
            key = cls(c)
            if key in owner:
                return Verdict(False, f"cell class {key} over-covered by placements {owner[key]} and {idx}")
            owner[key] = idx
    need = abs(det) * lat.K
    if len(owner) != need:
        for x in range(basis[0]):
            for y in range(basis[2]):
                for s in range(lat.K):
                    if (x, y, s) not in owner:
                        return Verdict(False, f"cell class {(x, y, s)} under-covered")
    orbits = _orbit_count(grid, lat, places, tiles, basis, t1, t2, cls)
    if orbits > cert.classes:
        return Verdict(False, f"{orbits} tile orbits exceed the claimed {cert.classes} classes")
    return Verdict(True)


def _orbit_count(grid, lat, places, tiles, basis, t1, t2, cls) -> int:
    """Orbits of the tiles under isometries preserving the periodic tiling."""
    signature = {frozenset(cls(c) for c in img) for img in tiles}
    trip = [sorted(_triple(lat, c) for c in img) for img in tiles]

    def preserves_lattice(i):
        return all(_reduce(basis, *lat.transform_vector(i, t)) == (0, 0) for t in (t1, t2))

    linear = [i for i in range(lat.order) if preserves_lattice(i)]
    parent = list(range(len(tiles)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for src in range(len(tiles)):
        for i in linear:
            moved = sorted(_triple(lat, apply_isometry(grid, Isometry(i, (0, 0)), lat.public(*c)))
                           for c in trip[src])
            h = None
            for dst in range(len(tiles)):
                if find(dst) == find(src):
                    continue
                a0, b0, s0 = moved[0]
                a1, b1, s1 = trip[dst][0]
                if s0 != s1:
                    continue
                t = (a1 - a0, b1 - b0)
                if [(a + t[0], b + t[1], s) for a, b, s in moved] != trip[dst]:
                    continue
                h = Isometry(i, t)
                if all(frozenset(cls(apply_isometry(grid, h, c)) for c in img) in signature
                       for img in tiles):
                    parent[find(dst)] = find(src)
    return len({find(x) for x in range(len(tiles))})


def verify_periodic(cert, shape=None) -> bool:
    return verify_periodic_report(cert, shape).ok
