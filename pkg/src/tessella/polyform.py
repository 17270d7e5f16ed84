"""Polyforms: canonical forms, enumeration, placements and patches."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .errors import BudgetExceeded, ValidationError
from .lattice import Cell, GridKind, Isometry, Lattice, get_lattice

MODES = ("free", "one_sided")


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}; got {mode!r}")
    return mode


def _ops(lat: Lattice, mode: str) -> range:
    return range(lat.rotations if mode == "one_sided" else lat.order)


# -- cell-set helpers on integer keys --------------------------------------

def edge_connected(lat: Lattice, keys) -> bool:
    keys = set(keys)
    if not keys:
        return False
    start = next(iter(keys))
    seen = {start}
    stack = [start]
    K = lat.K
    deltas = lat.edge_deltas
    while stack:
        k = stack.pop()
        for d in deltas[k % K]:
            n = k + d
            if n in keys and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(keys)


def disk_keys(lat: Lattice, keys) -> bool:
    """Topological-disk test on a set of cell keys.

    The union is a disk iff it is edge-connected, every corner has at most
    two incident boundary edges (no pinch points) and V - E + F == 1.
    """
    keys = keys if isinstance(keys, (set, frozenset)) else set(keys)
    if not keys or not edge_connected(lat, keys):
        return False
    edges: dict[tuple[int, int], int] = {}
    verts = set()
    for k in keys:
        vs = lat.vertex_keys(k)
        verts.update(vs)
        prev = vs[-1]
        for v in vs:
            e = (prev, v) if prev < v else (v, prev)
            edges[e] = edges.get(e, 0) + 1
            prev = v
    degree: dict[int, int] = {}
    for (u, v), c in edges.items():
        if c == 1:
            du = degree.get(u, 0) + 1
            dv = degree.get(v, 0) + 1
            if du > 2 or dv > 2:
                return False
            degree[u] = du
            degree[v] = dv
    return len(verts) - len(edges) + len(keys) == 1


def normalize_keys(lat: Lattice, keys) -> tuple[tuple[int, ...], int]:
    """Translate so the least cell sits in lattice cell (0, 0); returns
    (sorted keys, key offset that was removed)."""
    anchor = min(keys)
    a, b, _ = lat.unkey(anchor)
    dk = lat.tkey((a, b))
    return tuple(sorted(k - dk for k in keys)), dk


def canonical_keys(lat: Lattice, keys, mode: str = "free") -> tuple[int, ...]:
    best = None
    for i in _ops(lat, mode):
        img, _ = normalize_keys(lat, [lat.apply_key(i, k) for k in keys])
        if best is None or img < best:
            best = img
    return best


# -- Polyform --------------------------------------------------------------

@dataclass(frozen=True)
class Polyform:
    """A connected set of cells, stored canonically."""

    grid: GridKind
    cells: tuple
    mode: str = "free"

    @cached_property
    def lattice(self) -> Lattice:
        return get_lattice(self.grid)

    @cached_property
    def keys(self) -> frozenset:
        return frozenset(self.lattice.key(c) for c in self.cells)

    @property
    def size(self) -> int:
        return len(self.cells)

    def to_json(self) -> dict:
        return {"format": "tessella-shape/1", "grid": self.grid.value,
                "cells": [list(c) for c in self.cells]}

    @cached_property
    def is_disk(self) -> bool:
        return disk_keys(self.lattice, self.keys)


def _from_keys(lat: Lattice, keys, mode: str) -> Polyform:
    return Polyform(lat.kind, tuple(lat.cell(k) for k in keys), mode)


def make_polyform(grid, cells: Iterable[Sequence[int]], mode: str = "free") -> Polyform:
    """Validate ``cells`` and return the canonical polyform they form."""
    _check_mode(mode)
    lat = get_lattice(grid)
    keys = {lat.key(tuple(c)) for c in cells}
    if not keys:
        raise ValidationError("a polyform needs at least one cell")
    if not edge_connected(lat, keys):
        raise ValidationError("cells are not edge-connected")
    return _from_keys(lat, canonical_keys(lat, keys, mode), mode)


def canonicalize(p: Polyform, mode: str | None = None) -> Polyform:
    mode = _check_mode(mode or p.mode)
    lat = p.lattice
    if not edge_connected(lat, p.keys):
        raise ValidationError("cells are not edge-connected")
    return _from_keys(lat, canonical_keys(lat, p.keys, mode), mode)


def enumerate_polyforms(grid, n: int, mode: str = "free", max_shapes: int | None = 2_000_000) -> list[Polyform]:
    """All ``n``-cell polyforms on ``grid``, one per equivalence class, in
    canonical order.  Grows every (n-1)-form by one edge-adjacent cell."""
    _check_mode(mode)
    if n < 1:
        raise ValidationError("size must be positive")
    lat = get_lattice(grid)
    level = {canonical_keys(lat, [lat.key3(0, 0, 0)], mode)}
    for size in range(2, n + 1):
        nxt = set()
        for form in level:
            fs = set(form)
            grown = set()
            for k in form:
                for nk in lat.neighbor_keys(k, vertex=False):
                    if nk not in fs and nk not in grown:
                        grown.add(nk)
                        nxt.add(canonical_keys(lat, fs | {nk}, mode))
            if max_shapes is not None and len(nxt) > max_shapes:
                raise BudgetExceeded(f"enumeration of size {size} exceeded {max_shapes} shapes",
                                     size=size, shapes=len(nxt))
        level = nxt
    return [_from_keys(lat, keys, mode) for keys in sorted(level)]


def is_topological_disk(grid, cells: Iterable[Sequence[int]]) -> bool:
    lat = get_lattice(grid)
    return disk_keys(lat, {lat.key(tuple(c)) for c in cells})


def outline_frame(grid, cells: Iterable[Sequence[int]], merge: bool = True) -> list[list[tuple[int, int]]]:
    """Boundary loops of a cell union in integer frame coordinates.

    Interior edges cancel; the remaining directed edges are chained into
    counterclockwise loops (holes come out clockwise).  With ``merge`` the
    vertices where the boundary runs straight on are dropped.
    """
    lat = get_lattice(grid)
    edges: dict = {}
    for c in cells:
        poly = lat.frame_polygon(*lat.check(c))
        for i, u in enumerate(poly):
            v = poly[(i + 1) % len(poly)]
            if (v, u) in edges:
                del edges[(v, u)]
            else:
                edges[(u, v)] = True
    succ: dict = {}
    for u, v in sorted(edges):
        succ.setdefault(u, []).append(v)
    loops = []
    while succ:
        start = min(succ)
        loop = [start]
        u = start
        while True:
            outs = succ[u]
            v = outs.pop(0)
            if not outs:
                del succ[u]
            if v == start:
                break
            loop.append(v)
            u = v
        if merge:
            loop = _merge_collinear(loop)
        loops.append(loop)
    return loops


def _merge_collinear(loop):
    out = []
    n = len(loop)
    for i in range(n):
        a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) != 0:
            out.append(b)
    return out


def outline(grid, cells: Iterable[Sequence[int]], merge: bool = True) -> list[list[tuple[float, float]]]:
    """Boundary loops of a cell union in Cartesian coordinates."""
    lat = get_lattice(grid)
    return [[lat.to_cartesian(x, y) for x, y in loop] for loop in outline_frame(grid, cells, merge)]


def boundary_word(s: Polyform) -> str:
    """Counterclockwise N/E/S/W boundary word of a simply connected polyomino,
    starting from its lexicographically least corner."""
    if s.grid is not GridKind.SQUARE:
        raise ValidationError("boundary words are defined for polyominoes only")
    if not s.is_disk:
        raise ValidationError("boundary word needs a simply connected polyomino")
    edges = {}
    for x, y in s.cells:
        for u, v in (((x, y), (x + 1, y)), ((x + 1, y), (x + 1, y + 1)),
                     ((x + 1, y + 1), (x, y + 1)), ((x, y + 1), (x, y))):
            if (v, u) in edges:
                del edges[(v, u)]
            else:
                edges[(u, v)] = True
    succ = {u: v for u, v in edges}
    start = min(succ)
    letters = {(1, 0): "E", (0, 1): "N", (-1, 0): "W", (0, -1): "S"}
    word = []
    u = start
    while True:
        v = succ[u]
        word.append(letters[(v[0] - u[0], v[1] - u[1])])
        u = v
        if u == start:
            break
    return "".join(word)


@lru_cache(maxsize=None)
def _builtin_table() -> dict:
    raw = resources.files("tessella").joinpath("data/builtin_shapes.json").read_text()
    data = json.loads(raw)
    for name, entry in data["shapes"].items():
        digest = hashlib.sha256(
            json.dumps(sorted(entry["cells"]), separators=(",", ":")).encode()).hexdigest()
        if digest != entry["sha256"]:
            raise RuntimeError(f"builtin shape {name!r} failed its checksum")
    return data["shapes"]


BUILTIN_NAMES = ("hat", "turtle")


def builtin(name: str, mode: str = "free") -> Polyform:
    """The hat (8 kites) or turtle (10 kites) polykite."""
    table = _builtin_table()
    if name not in table:
        raise KeyError(f"unknown builtin shape {name!r}; known: {', '.join(sorted(table))}")
    entry = table[name]
    return make_polyform(entry["grid"], [tuple(c) for c in entry["cells"]], mode)


# -- placements and patches ------------------------------------------------

@dataclass(frozen=True)
class Placement:
    """A congruent copy of ``base``; identity is the realized cell set."""

    cells: frozenset
    g: Isometry = field(compare=False)
    base: Polyform = field(compare=False, repr=False)


@dataclass
class PatchData:
    placements: list
    corona: list | None = None

    def cells(self) -> set:
        out = set()
        for p in self.placements:
            out |= p.cells
        return out


class Prototile:
    """Search-oriented compilation of a shape.

    A placement is identified by ``(oc, shift)``: the index of a distinct
    orientation and the key offset added to that orientation's normalized
    cells.  Two placements are equal exactly when their realized cells are.
    """

    def __init__(self, grid, keys, mode: str = "free"):
        self.lat = lat = get_lattice(grid)
        self.grid = lat.kind
        self.mode = mode
        self.keys = frozenset(keys)
        self.ops = list(_ops(lat, mode))
        self.orient: list[tuple[int, ...]] = []
        self.orient_op: list[int] = []
        self.op_oc: dict[int, int] = {}
        self.op_off: dict[int, int] = {}
        index: dict[tuple[int, ...], int] = {}
        for i in self.ops:
            img, dk = normalize_keys(lat, [lat.apply_key(i, k) for k in self.keys])
            if img not in index:
                index[img] = len(self.orient)
                self.orient.append(img)
                self.orient_op.append(i)
            self.op_oc[i] = index[img]
            self.op_off[i] = dk
        # isometries mapping the identity copy onto itself
        self.stabilizer = [Isometry(i, lat.untkey(self.op_off[0] - self.op_off[i]))
                           for i in self.ops if self.op_oc[i] == self.op_oc[0]]
        self._neighbors: dict[bool, list[Isometry]] = {}

    # identity conversions
    def pid(self, g: Isometry) -> tuple[int, int]:
        return self.op_oc[g.point], self.op_off[g.point] + self.lat.tkey(g.t)

    def pid_of(self, i: int, t0: int, t1: int) -> tuple[int, int]:
        return self.op_oc[i], self.op_off[i] + self.lat.tkey((t0, t1))

    def cells_of(self, pid) -> frozenset:
        oc, shift = pid
        return frozenset(k + shift for k in self.orient[oc])

    def iso_of(self, pid) -> Isometry:
        oc, shift = pid
        i = self.orient_op[oc]
        return Isometry(i, self.lat.untkey(shift - self.op_off[i]))

    def identity(self) -> tuple[int, int]:
        return self.pid(Isometry(0, (0, 0)))

    def base_neighbors(self, vertex: bool = True) -> list[Isometry]:
        """Representative isometries of all placements touching the identity copy."""
        if vertex not in self._neighbors:
            lat = self.lat
            K = lat.K
            ring = set()
            for k in self.keys:
                for n in lat.neighbor_keys(k, vertex):
                    if n not in self.keys:
                        ring.add(n)
            found = set()
            for oc, cells in enumerate(self.orient):
                for c in ring:
                    for d in cells:
                        if d % K == c % K:
                            shift = c - d
                            if self.keys.isdisjoint(k + shift for k in cells):
                                found.add((oc, shift))
            self._neighbors[vertex] = [self.iso_of(p) for p in sorted(found)]
        return self._neighbors[vertex]

    def compose_pid(self, g: Isometry, h: Isometry) -> tuple[int, int]:
        lat = self.lat
        m = lat.mats[g.point]
        t = h.t
        k = lat.comp[g.point][h.point]
        return self.op_oc[k], self.op_off[k] + lat.tkey(
            (m[0][0] * t[0] + m[0][1] * t[1] + g.t[0], m[1][0] * t[0] + m[1][1] * t[1] + g.t[1]))

    def placement(self, pid, base: Polyform | None = None) -> Placement:
        lat = self.lat
        return Placement(frozenset(lat.cell(k) for k in self.cells_of(pid)), self.iso_of(pid), base)


@lru_cache(maxsize=256)
def prototile(s: Polyform) -> Prototile:
    return Prototile(s.grid, s.keys, s.mode)


def place(s: Polyform, g: Isometry) -> Placement:
    pt = prototile(s)
    return pt.placement(pt.pid(g), s)


def neighbor_placements(s: Polyform, mode: str = "vertex") -> list[Placement]:
    """All placements of ``s`` disjoint from the identity copy and touching it."""
    if mode not in ("edge", "vertex"):
        raise ValidationError(f"unknown adjacency mode {mode!r}")
    pt = prototile(s)
    return [pt.placement(pt.pid(g), s) for g in pt.base_neighbors(mode == "vertex")]
