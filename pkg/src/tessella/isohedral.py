"""Periodic and isohedral tiling certificates.

Two routes produce a :class:`PeriodicCertificate`:

* ``translation_criterion`` factors a polyomino's boundary word as
  ``A B C A^ B^ C^`` and reads the lattice off the factor endpoints.
* ``isohedral_certificate`` searches for a surround rule: a set of neighbour
  frames such that every copy ``f.S`` is surrounded by ``f.h.S`` for each rule
  frame ``h``.  The rule is propagated outward, translations are collected
  from copies whose frame is a pure translation, and the resulting
  fundamental domain is checked exactly.

``isohedral_number_upper`` repeats both tests on k-copy patches treated as
composite tiles; the smallest successful k bounds the isohedral number from
above.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

from .certify import verify_periodic_report
from .errors import BudgetExceeded, Inconclusive, ValidationError
from .lattice import GridKind, Isometry, get_lattice
from .polyform import PatchData, Polyform, Prototile, boundary_word, disk_keys, prototile

ISOHEDRAL = "ISOHEDRAL"
K_ISOHEDRAL = "K_ISOHEDRAL"
NONE_UP_TO_BUDGET = "NONE_UP_TO_BUDGET"

MAX_DEPTH = 12

_STEP = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
_OPPOSITE = {"E": "W", "W": "E", "N": "S", "S": "N"}


@dataclass
class PeriodicCertificate:
    """A periodic tiling: ``patch`` translated by the lattice of ``t1``, ``t2``.

    ``classes`` bounds the number of tile orbits under the tiling's
    symmetries; ``groups`` records which placements form one composite tile
    when the certificate came from a k-copy patch.
    """

    patch: PatchData
    t1: tuple
    t2: tuple
    classes: int
    groups: list | None = None

    def to_json(self) -> dict:
        from .io import patch_to_json
        return {"format": "tessella-periodic/1", "patch": patch_to_json(self.patch),
                "t1": list(self.t1), "t2": list(self.t2), "classes": self.classes}


@dataclass
class IsohedralResult:
    shape: Polyform
    status: str
    k: int | None
    certificate: PeriodicCertificate | None
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Factorization:
    """Boundary word rotated by ``offset`` equals A B C A^ B^ C^."""

    word: str
    offset: int
    A: str
    B: str
    C: str
    t1: tuple
    t2: tuple


# -- boundary-word criterion ----------------------------------------------

def hat_word(x: str) -> str:
    """Reverse ``x`` and reverse every step."""
    return "".join(_OPPOSITE[ch] for ch in reversed(x))


def _vec(x: str) -> tuple:
    return (sum(_STEP[ch][0] for ch in x), sum(_STEP[ch][1] for ch in x))


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


def _independent(u, v) -> bool:
    return u[0] * v[1] - u[1] * v[0] != 0


def translation_criterion(s: Polyform) -> Factorization | None:
    """Factor the boundary word as A B C A^ B^ C^ (at most one factor empty),
    or return None when no such factorization exists."""
    if s.grid is not GridKind.SQUARE:
        raise ValidationError("translation criterion is implemented for polyominoes only")
    w = boundary_word(s)
    n = len(w)
    half = n // 2
    for off in range(n):
        r = w[off:] + w[:off]
        for la in range(half, -1, -1):
            for lb in range(half - la, -1, -1):
                lc = half - la - lb
                if (la == 0) + (lb == 0) + (lc == 0) > 1:
                    continue
                a, b, c = r[:la], r[la:la + lb], r[la + lb:half]
                if r[half:] != hat_word(a) + hat_word(b) + hat_word(c):
                    continue
                p1 = _vec(a)
                p2 = _vec(a + b)
                p3 = _vec(r[:half])
                p4 = _vec(r[:half + la])
                p5 = _vec(r[:half + la + lb])
                ta, tb, tc = _sub(p1, p3), _sub(p2, p4), _sub(p3, p5)
                pair = next(((u, v) for u, v in ((ta, tb), (tb, tc), (ta, tc)) if _independent(u, v)), None)
                if pair is None:
                    continue
                t1, t2 = _gauss(*pair)
                return Factorization(w, off, a, b, c, t1, t2)
    return None


def translation_certificate(s: Polyform) -> PeriodicCertificate | None:
    f = translation_criterion(s)
    if f is None:
        return None
    pt = prototile(s)
    return PeriodicCertificate(PatchData([pt.placement(pt.identity(), s)]), f.t1, f.t2, 1)


# -- lattice helpers -------------------------------------------------------

def _lattice_basis(vectors):
    """Hermite basis (A, 0), (B, C) of the lattice spanned by ``vectors``,
    or None when they span less than a rank-2 lattice."""
    row = None
    A = 0
    for x, y in vectors:
        if y == 0:
            A = gcd(A, x)
            continue
        if row is None:
            row = (x, y)
            continue
        (x1, y1), (x2, y2) = row, (x, y)
        while y2 != 0:
            q = y1 // y2
            x1, y1, x2, y2 = x2, y2, x1 - q * x2, y1 - q * y2
        A = gcd(A, x2)
        row = (x1, y1)
    if row is None or A == 0:
        return None
    x1, y1 = row
    if y1 < 0:
        x1, y1 = -x1, -y1
    return A, x1 % A, y1


def _reduce(basis, x, y):
    A, B, C = basis
    k = y // C
    return (x - k * B) % A, y - k * C


def _gauss(u, v):
    """Lagrange-Gauss reduction of a 2D integer basis (Euclidean norm)."""
    def n2(w):
        return w[0] * w[0] + w[1] * w[1]

    if n2(u) > n2(v):
        u, v = v, u
    while True:
        d = n2(u)
        m = round((u[0] * v[0] + u[1] * v[1]) / d)
        v = (v[0] - m * u[0], v[1] - m * u[1])
        if n2(v) >= n2(u):
            return u, v
        u, v = v, u


# -- surround-rule search --------------------------------------------------

class _Frames:
    """Isometries of a tile taken modulo a subgroup G of its stabilizer."""

    def __init__(self, lat, group):
        self.lat = lat
        self.group = group

    def canon(self, f: Isometry) -> Isometry:
        lat = self.lat
        best = None
        for g in self.group:
            h = lat.compose(f, g)
            if best is None or (h.point, h.t) < (best.point, best.t):
                best = h
        return best


def _subgroups(lat, stab):
    """All subgroups of the finite group ``stab`` (largest first)."""
    ident = Isometry(0, (0, 0))

    def close(gens):
        elems = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = lat.compose(a, g)
                    if b not in elems:
                        elems.add(b)
                        nxt.append(b)
            frontier = nxt
        return frozenset(elems)

    seen = set()
    for a in stab:
        for b in stab:
            seen.add(close([a, b]))
    return sorted(seen, key=lambda g: (-len(g), sorted((x.point, x.t) for x in g)))


class _RuleSearch:
    """Depth-first search for neighbour-frame rules closed under inverses,
    the subgroup G and touching products."""

    def __init__(self, pt: Prototile, group, budget=None):
        self.pt = pt
        self.lat = lat = pt.lat
        self.fr = _Frames(lat, sorted(group, key=lambda x: (x.point, x.t)))
        self.group = self.fr.group
        self.identity = pt.identity()
        self.id_frame = self.fr.canon(Isometry(0, (0, 0)))
        self.scells = pt.cells_of(self.identity)
        ring = set()
        for k in self.scells:
            for n in lat.neighbor_keys(k, True):
                if n not in self.scells:
                    ring.add(n)
        self.ring = ring
        self.options: dict = {}
        stab = pt.stabilizer
        for h in pt.base_neighbors(True):
            q = pt.pid(h)
            frames = sorted({self.fr.canon(lat.compose(h, s)) for s in stab}, key=lambda x: (x.point, x.t))
            for c in pt.cells_of(q) & ring:
                self.options.setdefault(c, []).extend((q, f) for f in frames)
        self.weight = {}
        for opts in self.options.values():
            for q, _ in opts:
                if q not in self.weight:
                    self.weight[q] = len(pt.cells_of(q) & ring)
        for c in self.options:
            self.options[c].sort(key=lambda o: (-self.weight[o[0]], o[0], o[1].point, o[1].t))
        self.rule: dict = {}
        self.owner: dict = {}
        self.trail: list = []
        self.budget = budget
        self.nodes = 0

    # closure ---------------------------------------------------------------
    def _add(self, q, f) -> bool:
        pt, lat, fr = self.pt, self.lat, self.fr
        queue = [(q, f)]
        while queue:
            q, f = queue.pop()
            have = self.rule.get(q)
            if have is not None:
                if have != f:
                    return False
                continue
            cells = pt.cells_of(q)
            if not cells.isdisjoint(self.scells) or not cells & self.ring:
                return False
            for c in cells:
                if c in self.owner:
                    return False
            self.rule[q] = f
            for c in cells:
                self.owner[c] = q
            self.trail.append(q)
            derived = [lat.invert(f)]
            derived += [lat.compose(g, f) for g in self.group]
            for f2 in list(self.rule.values()):
                derived.append(lat.compose(f, f2))
                derived.append(lat.compose(f2, f))
            for x in derived:
                x = fr.canon(x)
                p = pt.pid(x)
                if p == self.identity:
                    if x != self.id_frame:
                        return False
                    continue
                pc = pt.cells_of(p)
                if not pc.isdisjoint(self.scells):
                    return False
                if pc & self.ring:
                    queue.append((p, x))
        return True

    def _undo(self, mark):
        pt = self.pt
        while len(self.trail) > mark:
            q = self.trail.pop()
            del self.rule[q]
            for c in pt.cells_of(q):
                del self.owner[c]

    # search ----------------------------------------------------------------
    def rules(self):
        ring_list = sorted(self.ring)

        def search():
            self.nodes += 1
            if self.budget is not None and self.nodes > self.budget:
                raise BudgetExceeded("rule search budget exhausted", nodes=self.nodes)
            best = None
            for c in ring_list:
                if c in self.owner:
                    continue
                opts = [(q, f) for q, f in self.options.get(c, ())
                        if q not in self.rule and self.pt.cells_of(q).isdisjoint(self.owner)]
                if not opts:
                    return
                if best is None or len(opts) < len(best):
                    best = opts
                    if len(opts) == 1:
                        break
            if best is None:
                yield dict(self.rule)
                return
            for q, f in best:
                mark = len(self.trail)
                if self._add(q, f):
                    yield from search()
                self._undo(mark)

        yield from search()


def _propagate(pt: Prototile, fr: _Frames, rule, depth):
    """Grow the tiling implied by ``rule`` to graph distance ``depth``.
    Returns (placed frames in BFS order, translation vectors) or None on conflict."""
    lat = pt.lat
    id_frame = fr.canon(Isometry(0, (0, 0)))
    start = pt.identity()
    placed = {start: id_frame}
    order = [start]
    owner = {c: start for c in pt.cells_of(start)}
    frontier = [start]
    frames = sorted(rule.values(), key=lambda x: (x.point, x.t))
    for _ in range(depth):
        nxt = []
        for p in frontier:
            f = placed[p]
            for h in frames:
                x = fr.canon(lat.compose(f, h))
                q = pt.pid(x)
                have = placed.get(q)
                if have is not None:
                    if have != x:
                        return None
                    continue
                cells = pt.cells_of(q)
                for c in cells:
                    if c in owner:
                        return None
                placed[q] = x
                order.append(q)
                for c in cells:
                    owner[c] = q
                nxt.append(q)
        frontier = nxt
    vectors = set()
    for q in order:
        for g in fr.group:
            y = lat.compose(placed[q], g)
            if y.point == 0 and y.t != (0, 0):
                vectors.add(y.t)
    return [(q, placed[q]) for q in order], sorted(vectors)


def _domain(pt: Prototile, tiles, vectors):
    """Fundamental-domain representatives of the propagated tiles.

    Returns (t1, t2, reps) on an exact cover, "incomplete" when the patch
    is too small to contain a full domain, or None on an overlap."""
    lat = pt.lat
    basis = _lattice_basis(vectors)
    if basis is None:
        return "incomplete"
    A, B, C = basis
    size = len(pt.keys)
    cells_per_domain = A * C * lat.K
    if cells_per_domain % size:
        return None
    need = cells_per_domain // size
    reps = []
    seen = set()
    for q, f in tiles:
        oc, shift = q
        key = (oc, _reduce(basis, *lat.untkey(shift)))
        if key not in seen:
            seen.add(key)
            reps.append((q, f))
    if len(reps) < need:
        return "incomplete"
    if len(reps) > need:
        return None
    covered = set()
    for q, _ in reps:
        for k in pt.cells_of(q):
            a, b, s = lat.unkey(k)
            c = _reduce(basis, a, b) + (s,)
            if c in covered:
                return None
            covered.add(c)
    t1, t2 = _gauss((A, 0), (B, C))
    return t1, t2, reps


def _stabilizer_subgroups(pt: Prototile, division):
    lat = pt.lat
    stab = pt.stabilizer
    if division is not None:
        base_pt, pieces = division
        target = {base_pt.pid(d) for d in pieces}
        stab = [g for g in stab if {base_pt.pid(lat.compose(g, d)) for d in pieces} == target]
    return _subgroups(lat, stab)


def _certificate_from(pt, division, base, reps, t1, t2, classes):
    lat = pt.lat
    placements = []
    groups = []
    if division is None:
        bpt = pt
        for q, f in reps:
            placements.append(bpt.placement(q, base))
    else:
        bpt, pieces = division
        for q, f in reps:
            group = []
            for d in pieces:
                g = lat.compose(f, d)
                group.append(len(placements))
                placements.append(bpt.placement(bpt.pid(g), base))
            groups.append(group)
    return PeriodicCertificate(PatchData(placements), t1, t2, classes, groups if division else None)


def _iso_search(pt: Prototile, base: Polyform, division=None, depth=3, classes=1, budget=None,
                stats=None):
    """First verified certificate for tile ``pt`` (a composite when
    ``division`` is given), None when every rule conflicts; raises
    Inconclusive when some rule stayed undecided at the depth cap."""
    undecided = False
    stats = stats if stats is not None else {}
    for group in _stabilizer_subgroups(pt, division):
        search = _RuleSearch(pt, group, budget)
        try:
            for rule in search.rules():
                stats["rules"] = stats.get("rules", 0) + 1
                d = depth
                while True:
                    prop = _propagate(pt, search.fr, rule, d)
                    if prop is None:
                        break
                    tiles, vectors = prop
                    dom = _domain(pt, tiles, vectors)
                    if dom is None:
                        break
                    if dom != "incomplete":
                        t1, t2, reps = dom
                        cert = _certificate_from(pt, division, base, reps, t1, t2, classes)
                        if verify_periodic_report(cert, base):
                            stats["depth"] = d
                            return cert
                        break
                    if d >= MAX_DEPTH:
                        undecided = True
                        break
                    d = min(2 * d, MAX_DEPTH)
        finally:
            stats["nodes"] = stats.get("nodes", 0) + search.nodes
    if undecided:
        raise Inconclusive(f"propagation reached depth {MAX_DEPTH} without a fundamental domain")
    return None


def isohedral_certificate(s: Polyform, depth: int = 3, budget: int | None = None) -> PeriodicCertificate | None:
    """Certificate of an isohedral tiling of ``s`` found by surround-rule
    propagation, or None when no surround rule is consistent."""
    if depth < 2:
        raise ValidationError("depth must be at least 2")
    return _iso_search(prototile(s), s, None, depth, 1, budget)


# -- k-copy composites -----------------------------------------------------

def _patch_canon(lat, ops, pieces):
    best = None
    for i in ops:
        img = [sorted(lat.apply_key(i, k) for k in piece) for piece in pieces]
        anchor = min(p[0] for p in img)
        a, b, _ = lat.unkey(anchor)
        dk = lat.tkey((a, b))
        key = tuple(sorted(tuple(k - dk for k in p) for p in img))
        if best is None or key < best:
            best = key
    return best


def k_copy_patches(s: Polyform, k: int, max_patches: int | None = 200_000):
    """Canonical simply connected k-copy patches of ``s`` (lists of pids),
    deduplicated under the point group, in canonical order."""
    pt = prototile(s)
    lat = pt.lat
    nbrs = pt.base_neighbors(False)
    layer = {_patch_canon(lat, pt.ops, [pt.cells_of(pt.identity())]): (pt.identity(),)}
    for size in range(2, k + 1):
        nxt = {}
        for pids in layer.values():
            occupied = set()
            for p in pids:
                occupied |= pt.cells_of(p)
            for p in pids:
                g = pt.iso_of(p)
                for h in nbrs:
                    q = pt.compose_pid(g, h)
                    if q in pids or not pt.cells_of(q).isdisjoint(occupied):
                        continue
                    new = pids + (q,)
                    key = _patch_canon(lat, pt.ops, [pt.cells_of(x) for x in new])
                    if key not in nxt:
                        nxt[key] = new
                        if max_patches is not None and len(nxt) > max_patches:
                            raise BudgetExceeded(f"more than {max_patches} {size}-copy patches", k=size)
        layer = nxt
    out = []
    for key in sorted(layer):
        pids = layer[key]
        union = set()
        for p in pids:
            union |= pt.cells_of(p)
        if disk_keys(lat, union):
            out.append(list(pids))
    return out


def _composite(s: Polyform, pids):
    pt = prototile(s)
    union = set()
    for p in pids:
        union |= pt.cells_of(p)
    cpt = Prototile(s.grid, union, s.mode)
    return cpt, (pt, [pt.iso_of(p) for p in pids]), union


@dataclass
class IsoStep:
    """Outcome of one rung of the isohedral ladder."""

    k: int
    certificate: PeriodicCertificate | None
    route: str | None = None
    patches: int = 0
    inconclusive: bool = False


def iso_step(s: Polyform, k: int, depth: int = 3, budget: int | None = None,
             max_patches: int | None = 200_000) -> IsoStep:
    """Try to certify a periodic tiling using k-copy patches of ``s``."""
    if k == 1:
        if s.grid is GridKind.SQUARE and s.is_disk:
            cert = translation_certificate(s)
            if cert is not None:
                return IsoStep(1, cert, "translation", 1)
        try:
            cert = isohedral_certificate(s, depth, budget)
        except Inconclusive:
            return IsoStep(1, None, None, 1, True)
        return IsoStep(1, cert, "surround" if cert else None, 1)
    try:
        patches = k_copy_patches(s, k, max_patches)
    except BudgetExceeded as exc:
        raise BudgetExceeded(f"k-copy patch enumeration exploded at k={k}", k=k) from exc
    inconclusive = False
    for pids in patches:
        cpt, division, union = _composite(s, pids)
        if s.grid is GridKind.SQUARE:
            cert = _translation_composite(s, cpt, division, union)
            if cert is not None:
                return IsoStep(k, cert, "translation", len(patches))
        try:
            cert = _iso_search(cpt, s, division, depth, k, budget)
        except Inconclusive:
            inconclusive = True
            continue
        if cert is not None:
            return IsoStep(k, cert, "surround", len(patches))
    return IsoStep(k, None, None, len(patches), inconclusive)


def isohedral_number_upper(s: Polyform, max_k: int = 4, depth: int = 3, budget: int | None = None,
                           max_patches: int | None = 200_000) -> IsohedralResult:
    """Smallest k <= max_k for which some k-copy patch tiles isohedrally."""
    if max_k < 1:
        raise ValidationError("max_k must be at least 1")
    stats: dict = {"patches": {}, "inconclusive": False}
    for k in range(1, max_k + 1):
        step = iso_step(s, k, depth, budget, max_patches)
        stats["patches"][k] = step.patches
        stats["inconclusive"] |= step.inconclusive
        if step.certificate is not None:
            stats["route"] = step.route
            return IsohedralResult(s, ISOHEDRAL if k == 1 else K_ISOHEDRAL, k, step.certificate, stats)
    return IsohedralResult(s, NONE_UP_TO_BUDGET, None, None, stats)


def _translation_composite(s, cpt, division, union):
    """Certificate for a composite that tiles by translations alone."""
    comp = Polyform(s.grid, tuple(sorted(cpt.lat.cell(x) for x in union)), s.mode)
    f = translation_criterion(comp)
    if f is None:
        return None
    bpt, pieces = division
    placements = [bpt.placement(bpt.pid(d), s) for d in pieces]
    cert = PeriodicCertificate(PatchData(placements), f.t1, f.t2, len(pieces), [list(range(len(pieces)))])
    return cert if verify_periodic_report(cert, s) else None
