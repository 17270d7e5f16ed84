"""Cell lattices: square, hexagon, triangle and kite grids.

Every cell is addressed as a lattice point ``(a, b)`` plus a sub-cell index
``s``.  Geometry is kept in an integer "frame" (either the square basis or the
60-degree triangular basis, scaled so all vertices are integral); floating
point appears only in :func:`cell_polygon`.

Public cell tuples are ``(x, y)`` for square and hexagon grids and
``(x, y, s)`` for triangle (``s=0`` up, ``s=1`` down) and kite grids
(``s`` in ``0..5`` indexes the six kites of hexagon ``(x, y)``, kite 0 spanning
from the east edge midpoint counterclockwise).

Internally search code works on integer *keys*; a lattice translation is a
plain integer addition on keys.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

Cell = tuple  # (x, y) or (x, y, s)

_SQRT3 = math.sqrt(3.0)

# key layout (row-major, y first): ((b + _B) * _W + (a + _B)) * K + s
_W = 1 << 20
_B = 1 << 19
# vertex key layout: (X + _VB) * _VW + (Y + _VB)
_VW = 1 << 24
_VB = 1 << 23


class GridKind(str, enum.Enum):
    SQUARE = "square"
    HEXAGON = "hex"
    TRIANGLE = "tri"
    KITE = "kite"

    @classmethod
    def parse(cls, value: "GridKind | str") -> "GridKind":
        if isinstance(value, GridKind):
            return value
        aliases = {
            "square": cls.SQUARE, "omino": cls.SQUARE, "polyomino": cls.SQUARE,
            "hex": cls.HEXAGON, "hexagon": cls.HEXAGON, "polyhex": cls.HEXAGON,
            "tri": cls.TRIANGLE, "triangle": cls.TRIANGLE, "iamond": cls.TRIANGLE,
            "kite": cls.KITE, "polykite": cls.KITE,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown grid kind {value!r}") from None


class CoordinateError(ValueError):
    """Raised for cell coordinates outside a grid's coordinate domain."""


@dataclass(frozen=True, order=True)
class Isometry:
    """A lattice-preserving rigid motion: point-group element, then translation."""

    point: int
    t: tuple[int, int] = (0, 0)


def _matmul(m, n):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


def _matvec(m, v):
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


_IDENTITY = ((1, 0), (0, 1))


class Lattice:
    """Integer model of one cell grid."""

    def __init__(self, kind, triangular, scale, subcells, rotation, reflection, order):
        self.kind = kind
        self.triangular = triangular
        self.scale = scale
        self.subcells = [tuple(vs) for vs in subcells]
        self.K = len(subcells)
        self.nverts = len(subcells[0])
        self.rotations = order
        self.order = 2 * order

        mats = []
        r = _IDENTITY
        for _ in range(order):
            mats.append(r)
            r = _matmul(rotation, r)
        mats += [_matmul(m, reflection) for m in mats[:order]]
        self.mats = mats

        self._decode_sums = []
        for s, vs in enumerate(self.subcells):
            self._decode_sums.append((s, sum(v[0] for v in vs), sum(v[1] for v in vs)))

        # point op i maps (x, s) -> (M_i x + off[i][s], perm[i][s])
        self.off = []
        self.perm = []
        for m in mats:
            offs, perms = [], []
            for vs in self.subcells:
                img = [_matvec(m, v) for v in vs]
                a, b, s2 = self._decode_vertex_sum(sum(p[0] for p in img), sum(p[1] for p in img))
                offs.append((a, b))
                perms.append(s2)
            self.off.append(offs)
            self.perm.append(perms)
        self.comp = [[mats.index(_matmul(mi, mj)) for mj in mats] for mi in mats]
        self.inv = [row.index(0) for row in self.comp]

        self._adjacency()
        self._vertex_consts = [
            [(vx + _VB) * _VW + (vy + _VB) for vx, vy in vs] for vs in self.subcells
        ]

    # -- coordinates -------------------------------------------------------
    def _decode_vertex_sum(self, sx, sy):
        d = self.nverts * self.scale
        for s, ox, oy in self._decode_sums:
            if (sx - ox) % d == 0 and (sy - oy) % d == 0:
                return (sx - ox) // d, (sy - oy) // d, s
        raise CoordinateError("vertex sum does not correspond to a cell")

    def check(self, cell: Sequence[int]) -> tuple[int, int, int]:
        """Validate a public cell tuple and return its (a, b, s) triple."""
        if self.K == 1:
            if len(cell) == 2:
                a, b = cell
                s = 0
            elif len(cell) == 3 and cell[2] == 0:
                a, b, s = cell
            else:
                raise CoordinateError(f"{self.kind.value} cells are (x, y); got {cell!r}")
        else:
            if len(cell) != 3:
                raise CoordinateError(f"{self.kind.value} cells are (x, y, s); got {cell!r}")
            a, b, s = cell
            if not 0 <= s < self.K:
                raise CoordinateError(f"sub-cell index {s} out of range 0..{self.K - 1}")
        if not all(isinstance(v, int) for v in (a, b, s)):
            raise CoordinateError(f"cell coordinates must be integers; got {cell!r}")
        if not (-_B < a < _B and -_B < b < _B):
            raise CoordinateError(f"cell {cell!r} outside supported coordinate range")
        return a, b, s

    def public(self, a: int, b: int, s: int) -> Cell:
        return (a, b) if self.K == 1 else (a, b, s)

    def key(self, cell: Sequence[int]) -> int:
        a, b, s = self.check(cell)
        return ((b + _B) * _W + (a + _B)) * self.K + s

    def key3(self, a: int, b: int, s: int) -> int:
        return ((b + _B) * _W + (a + _B)) * self.K + s

    def unkey(self, key: int) -> tuple[int, int, int]:
        rest, s = divmod(key, self.K)
        b, a = divmod(rest, _W)
        return a - _B, b - _B, s

    def cell(self, key: int) -> Cell:
        return self.public(*self.unkey(key))

    def tkey(self, t: Sequence[int]) -> int:
        """Key offset realizing the lattice translation ``t``."""
        return (t[1] * _W + t[0]) * self.K

    def untkey(self, dk: int) -> tuple[int, int]:
        q = dk // self.K
        b, a = divmod(q + _B, _W)
        return a - _B, b

    # -- group action ------------------------------------------------------
    def apply3(self, i: int, t: Sequence[int], a: int, b: int, s: int):
        m = self.mats[i]
        ox, oy = self.off[i][s]
        return (m[0][0] * a + m[0][1] * b + ox + t[0],
                m[1][0] * a + m[1][1] * b + oy + t[1],
                self.perm[i][s])

    def apply_key(self, i: int, key: int) -> int:
        return self.key3(*self.apply3(i, (0, 0), *self.unkey(key)))

    def compose(self, g: Isometry, h: Isometry) -> Isometry:
        m = self.mats[g.point]
        u = _matvec(m, h.t)
        return Isometry(self.comp[g.point][h.point], (u[0] + g.t[0], u[1] + g.t[1]))

    def invert(self, g: Isometry) -> Isometry:
        j = self.inv[g.point]
        u = _matvec(self.mats[j], g.t)
        return Isometry(j, (-u[0], -u[1]))

    def transform_vector(self, i: int, t: Sequence[int]) -> tuple[int, int]:
        return _matvec(self.mats[i], t)

    # -- adjacency ---------------------------------------------------------
    def _frame_vertices(self, a, b, s):
        S = self.scale
        return [(S * a + vx, S * b + vy) for vx, vy in self.subcells[s]]

    def _adjacency(self):
        self.edge_offsets = []
        self.vertex_offsets = []
        for s in range(self.K):
            mine = set(self._frame_vertices(0, 0, s))
            edge, vert = [], []
            for a in range(-2, 3):
                for b in range(-2, 3):
                    for s2 in range(self.K):
                        if (a, b, s2) == (0, 0, s):
                            continue
                        shared = len(mine & set(self._frame_vertices(a, b, s2)))
                        if shared >= 1:
                            vert.append((a, b, s2))
                        if shared >= 2:
                            edge.append((a, b, s2))
            self.edge_offsets.append(sorted(edge))
            self.vertex_offsets.append(sorted(vert))
        self.edge_deltas = [
            [self.tkey((a, b)) + s2 - s for a, b, s2 in offs] for s, offs in enumerate(self.edge_offsets)
        ]
        self.vertex_deltas = [
            [self.tkey((a, b)) + s2 - s for a, b, s2 in offs] for s, offs in enumerate(self.vertex_offsets)
        ]

    def neighbor_keys(self, key: int, vertex: bool = True) -> list[int]:
        s = key % self.K
        deltas = self.vertex_deltas[s] if vertex else self.edge_deltas[s]
        return [key + d for d in deltas]

    def vertex_keys(self, key: int) -> list[int]:
        """Integer ids of the corners of a cell (shared between cells)."""
        a, b, s = self.unkey(key)
        base = self.scale * a * _VW + self.scale * b
        return [base + c for c in self._vertex_consts[s]]

    # -- geometry ----------------------------------------------------------
    def to_cartesian(self, X: float, Y: float) -> tuple[float, float]:
        S = self.scale
        if self.triangular:
            return ((X + Y / 2.0) / S, (Y * _SQRT3 / 2.0) / S)
        return ((X + 1) / S, (Y + 1) / S)

    def frame_polygon(self, a: int, b: int, s: int) -> list[tuple[int, int]]:
        return self._frame_vertices(a, b, s)

    def vertex_frame(self, vkey: int) -> tuple[int, int]:
        X, Y = divmod(vkey, _VW)
        return X - _VB, Y - _VB


def _build(kind: GridKind) -> Lattice:
    if kind is GridKind.SQUARE:
        # frame is doubled and centred on cell (0, 0) so rotations fix that cell
        return Lattice(kind, False, 2, [[(-1, -1), (1, -1), (1, 1), (-1, 1)]],
                       ((0, -1), (1, 0)), ((1, 0), (0, -1)), 4)
    rot = ((0, -1), (1, 1))
    refl = ((1, 1), (0, -1))
    if kind is GridKind.HEXAGON:
        hexagon = [(4, -2), (2, 2), (-2, 4), (-4, 2), (-2, -2), (2, -4)]
        return Lattice(kind, True, 6, [hexagon], rot, refl, 6)
    if kind is GridKind.TRIANGLE:
        return Lattice(kind, True, 1, [[(0, 0), (1, 0), (0, 1)], [(1, 0), (1, 1), (0, 1)]],
                       rot, refl, 6)
    mids, verts = [], []
    m, v = (3, 0), (2, 2)
    for _ in range(6):
        mids.append(m)
        verts.append(v)
        m, v = _matvec(rot, m), _matvec(rot, v)
    kites = [[(0, 0), mids[k], verts[k], mids[(k + 1) % 6]] for k in range(6)]
    return Lattice(kind, True, 6, kites, rot, refl, 6)


@lru_cache(maxsize=None)
def get_lattice(grid: "GridKind | str") -> Lattice:
    return _build(GridKind.parse(grid))


# -- public operations -----------------------------------------------------

def cell_neighbors(grid, c: Sequence[int], mode: str = "edge") -> set:
    """Cells other than ``c`` sharing an edge (``mode="edge"``) or at least a
    vertex (``mode="vertex"``) with ``c``."""
    if mode not in ("edge", "vertex"):
        raise ValueError(f"unknown adjacency mode {mode!r}")
    lat = get_lattice(grid)
    a, b, s = lat.check(c)
    offs = lat.vertex_offsets[s] if mode == "vertex" else lat.edge_offsets[s]
    return {lat.public(a + da, b + db, s2) for da, db, s2 in offs}


def point_group(grid, one_sided: bool = False) -> list[Isometry]:
    lat = get_lattice(grid)
    n = lat.rotations if one_sided else lat.order
    return [Isometry(i, (0, 0)) for i in range(n)]


def apply_isometry(grid, g: Isometry, c: Sequence[int]) -> Cell:
    lat = get_lattice(grid)
    if not 0 <= g.point < lat.order:
        raise CoordinateError(f"point index {g.point} out of range for {lat.kind.value}")
    a, b, s = lat.check(c)
    return lat.public(*lat.apply3(g.point, g.t, a, b, s))


def compose(grid, g: Isometry, h: Isometry) -> Isometry:
    """The isometry ``g o h`` (apply ``h`` first)."""
    return get_lattice(grid).compose(g, h)


def invert(grid, g: Isometry) -> Isometry:
    return get_lattice(grid).invert(g)


def is_reflection(grid, g: Isometry) -> bool:
    return g.point >= get_lattice(grid).rotations


def cell_polygon(grid, c: Sequence[int]) -> list[tuple[float, float]]:
    """Counterclockwise Cartesian vertices of a cell."""
    lat = get_lattice(grid)
    a, b, s = lat.check(c)
    return [lat.to_cartesian(X, Y) for X, Y in lat.frame_polygon(a, b, s)]


def translate_cells(cells: Iterable[Cell], t: Sequence[int]) -> list[Cell]:
    return [(c[0] + t[0], c[1] + t[1]) + tuple(c[2:]) for c in cells]
