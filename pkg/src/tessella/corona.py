"""Surrounds, k-patches and Heesch numbers.

Two engines answer "does ``s`` have an n-patch?":

* ``backtrack`` runs one exact-cover search over all coronas: cells around
  every copy below the outermost corona must be covered by disjoint copies,
  and a copy's corona is its touching distance from the centre.
* ``sat`` encodes all coronas at once and repairs holes lazily: a decoded
  patch that is not a disk at some level gets clauses forbidding that
  defect, then the formula is solved again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import satcore
from .errors import BudgetExceeded, ValidationError
from .lattice import Isometry, Lattice
from .polyform import PatchData, Placement, Polyform, Prototile, disk_keys, prototile

ENGINES = ("sat", "backtrack")
NONTILER = "NONTILER"
BUDGET = "BUDGET"


@dataclass
class SurroundProblem:
    center: PatchData
    candidates: list
    adjacency_mode: str = "vertex"


@dataclass
class HeeschResult:
    shape: Polyform
    status: str
    heesch_number: int
    certificate: PatchData
    engine: str = "sat"
    stats: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.status == NONTILER


# -- internal patch representation -----------------------------------------
# a tile is (pid, corona); pt.iso_of(pid) recovers an isometry when needed


def _ring(lat: Lattice, occupied) -> set:
    ring = set()
    for k in occupied:
        for n in lat.neighbor_keys(k, True):
            if n not in occupied:
                ring.add(n)
    return ring


def _touching(pt: Prototile, tiles, occupied, vertex: bool) -> dict:
    """Placements touching any of ``tiles`` and disjoint from ``occupied``."""
    out = {}
    nbrs = pt.base_neighbors(vertex)
    for pid in tiles:
        g = pt.iso_of(pid)
        for h in nbrs:
            q = pt.compose_pid(g, h)
            if q in out:
                continue
            cells = pt.cells_of(q)
            if cells.isdisjoint(occupied):
                out[q] = cells
    return out


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(f"search node budget of {self.limit} exhausted", nodes=self.used)


def _iter_surrounds(pt: Prototile, outer, occupied, vertex=True, allow_holes=False, budget=None):
    """Yield every surround of the patch occupying ``occupied`` whose outer
    corona is ``outer``; each surround is a list of pids."""
    lat = pt.lat
    budget = budget or _Budget(None)
    cand = _touching(pt, outer, occupied, vertex)
    ring = _ring(lat, occupied)
    pids = sorted(cand)
    cells = [cand[q] for q in pids]
    weight = [len(c & ring) for c in cells]
    by_cell: dict[int, list[int]] = {}
    for i, cs in enumerate(cells):
        for c in cs:
            by_cell.setdefault(c, []).append(i)
    cover = {}
    for c in ring:
        opts = by_cell.get(c, [])
        if not opts:
            return
        cover[c] = sorted(opts, key=lambda i: (-weight[i], i))
    conflicts = [None] * len(pids)
    for i, cs in enumerate(cells):
        s = set()
        for c in cs:
            s.update(by_cell[c])
        s.discard(i)
        conflicts[i] = s
    blocked = [0] * len(pids)
    ring_list = sorted(ring)
    covered = set()
    chosen: list[int] = []

    def search():
        budget.tick()
        best = None
        best_opts = None
        for c in ring_list:
            if c in covered:
                continue
            opts = [i for i in cover[c] if not blocked[i]]
            if not opts:
                return
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = c, opts
                if len(opts) == 1:
                    break
        if best is None:
            if allow_holes or disk_keys(lat, occupied | covered):
                yield [pids[i] for i in chosen]
            return
        for i in best_opts:
            chosen.append(i)
            new = cells[i] - covered
            covered.update(new)
            blocked[i] += 1
            for j in conflicts[i]:
                blocked[j] += 1
            yield from search()
            for j in conflicts[i]:
                blocked[j] -= 1
            blocked[i] -= 1
            covered.difference_update(new)
            chosen.pop()

    yield from search()


def _backtrack_patch(pt: Prototile, n: int, vertex=True, allow_holes=False, budget=None):
    """First n-patch found by backtracking, as a list of (pid, corona), or
    None when none exists.

    All coronas are filled in one exact-cover search.  A copy's corona is its
    distance from the centre in the touching graph of the chosen copies, so
    the labels follow from the chosen set; a copy at distance < n makes its
    ring of cells required, and the most constrained required cell is
    branched on first.
    """
    lat = pt.lat
    budget = budget or _Budget(None)
    cands, _ = _closure(pt, n, vertex)
    m = len(cands)
    index = {q: i for i, q in enumerate(cands)}
    cells = [pt.cells_of(q) for q in cands]
    by_cell: dict[int, list[int]] = {}
    for i in range(1, m):
        for c in cells[i]:
            by_cell.setdefault(c, []).append(i)
    nbrs = pt.base_neighbors(vertex)
    touches: list = [None] * m

    def touch(i):
        if touches[i] is None:
            g = pt.iso_of(cands[i])
            touches[i] = {index[r] for r in (pt.compose_pid(g, h) for h in nbrs) if r in index}
        return touches[i]

    rings: list = [None] * m
    K = lat.K
    pocket_limit = 3 * len(cells[0]) + 8

    def ring(i):
        if rings[i] is None:
            rings[i] = _ring(lat, cells[i])
        return rings[i]

    far = n + 1
    dist = {0: 0}
    placed = [0]
    owner = {c: 0 for c in cells[0]}
    blocked = [0] * m
    need: dict[int, int] = {}
    for c in ring(0):
        need[c] = 1

    def require(i, sign):
        for c in ring(i):
            v = need.get(c, 0) + sign
            if v:
                need[c] = v
            else:
                del need[c]

    def add(i):
        """Place copy i; returns the undo record of distance changes."""
        placed.append(i)
        for c in cells[i]:
            owner[c] = i
            for j in by_cell[c]:
                blocked[j] += 1
        d = min((dist[j] for j in touch(i) if j in dist), default=far - 1) + 1
        dist[i] = d
        changes = []
        if d < n:
            require(i, 1)
        todo = [i]
        while todo:
            u = todo.pop()
            for j in touch(u):
                if j in dist and dist[j] > dist[u] + 1:
                    old = dist[j]
                    changes.append((j, old))
                    dist[j] = dist[u] + 1
                    if old >= n > dist[j]:
                        require(j, 1)
                    todo.append(j)
        pockets = [] if allow_holes else enclosed(i)
        for c in pockets:
            need[c] = need.get(c, 0) + 1
        return changes, pockets

    def enclosed(i):
        """Free cells next to copy i cut off from the outside; a hole-free
        patch has to fill them."""
        out = []
        seen = set()
        for start in ring(i):
            if start in owner or start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack and len(comp) <= pocket_limit:
                k = stack.pop()
                for dk in lat.edge_deltas[k % K]:
                    nk = k + dk
                    if nk not in owner and nk not in comp:
                        comp.add(nk)
                        stack.append(nk)
            seen |= comp
            if len(comp) <= pocket_limit:
                out.extend(comp)
        return out

    def remove(i, undo):
        changes, pockets = undo
        for c in pockets:
            v = need[c] - 1
            if v:
                need[c] = v
            else:
                del need[c]
        for j, old in reversed(changes):
            if old >= n > dist[j]:
                require(j, -1)
            dist[j] = old
        if dist[i] < n:
            require(i, -1)
        del dist[i]
        for c in cells[i]:
            del owner[c]
            for j in by_cell[c]:
                blocked[j] -= 1
        placed.pop()

    def complete():
        if any(d > n for d in dist.values()):
            return False
        if allow_holes:
            return True
        layer = set(cells[0])
        for k in range(1, n + 1):
            layer |= {c for i in placed if dist[i] == k for c in cells[i]}
            if not disk_keys(lat, layer):
                return False
        return True

    def search():
        budget.tick()
        best = None
        for c in need:
            if c in owner:
                continue
            opts = [j for j in by_cell.get(c, ()) if not blocked[j]]
            if not opts:
                return None
            if best is None or len(opts) < len(best):
                best = opts
                if len(opts) == 1:
                    break
        if best is None:
            return [(cands[i], dist[i]) for i in placed] if complete() else None
        for j in best:
            undo = add(j)
            found = search()
            remove(j, undo)
            if found is not None:
                return found
        return None

    return search()


# -- SAT encoding ----------------------------------------------------------

@dataclass
class VarMap:
    """Variables of an n-patch encoding."""

    n: int
    candidates: list                    # pids; index 0 is the fixed centre copy
    dist: list                          # touching-graph distance from the centre
    used: list                          # used[i] -> var
    level: list                         # level[i][k-1] -> var for corona k in 1..n
    cover: dict = field(default_factory=dict)  # (cell, k) -> var "cell covered at corona k"
    counts: dict = field(default_factory=dict)

    def decode(self, model) -> list:
        tiles = [(self.candidates[0], 0)]
        for i in range(1, len(self.candidates)):
            if model[self.used[i]]:
                ks = [k for k in range(1, self.n + 1) if model[self.level[i][k - 1]]]
                tiles.append((self.candidates[i], ks[0]))
        return tiles


def _closure(pt: Prototile, n: int, vertex: bool):
    center = pt.identity()
    ccells = pt.cells_of(center)
    dist = {center: 0}
    frontier = [center]
    nbrs = pt.base_neighbors(vertex)
    for d in range(1, n + 1):
        nxt = []
        for p in frontier:
            g = pt.iso_of(p)
            for h in nbrs:
                q = pt.compose_pid(g, h)
                if q not in dist and ccells.isdisjoint(pt.cells_of(q)):
                    dist[q] = d
                    nxt.append(q)
        frontier = sorted(nxt)
    order = sorted(dist, key=lambda q: (dist[q], q))
    return order, dist


def _encode(pt: Prototile, n: int, vertex: bool = True, max_candidates: int | None = 200_000):
    lat = pt.lat
    cands, dist = _closure(pt, n, vertex)
    if max_candidates is not None and len(cands) > max_candidates:
        raise BudgetExceeded(f"{len(cands)} candidate placements exceed the limit {max_candidates}",
                             candidates=len(cands), n=n)
    # every candidate sits within the radius the certificate checker accepts
    ab = [lat.unkey(k)[:2] for k in pt.cells_of(cands[0])]
    diam = max(max(a for a, _ in ab) - min(a for a, _ in ab), max(b for _, b in ab) - min(b for _, b in ab))
    bound = (n + 1) * (diam + 2)
    assert all(max(map(abs, pt.iso_of(q).t)) <= bound for q in cands), "candidate outside radius bound"
    f = satcore.Cnf()
    m = len(cands)
    used = [f.new_var() for _ in range(m)]
    level = [[f.new_var() for _ in range(n)] for _ in range(m)]
    cells = [pt.cells_of(q) for q in cands]
    center_cells = cells[0]
    vm = VarMap(n, cands, [dist[q] for q in cands], used, level)

    # centre fixed at corona 0
    f.add([used[0]])
    for k in range(n):
        f.add([-level[0][k]])

    by_cell: dict[int, list[int]] = {}
    for i, cs in enumerate(cells):
        for c in cs:
            by_cell.setdefault(c, []).append(i)

    # non-overlap
    for c in sorted(by_cell):
        idx = by_cell[c]
        if len(idx) > 1:
            f.extend(satcore.at_most_one([used[i] for i in idx], pool=f))

    # level totality; distance bound
    for i in range(1, m):
        f.add([-used[i]] + level[i])
        for k in range(n):
            f.add([-level[i][k], used[i]])
        f.extend(satcore.at_most_one(level[i], "pairwise"))
        for k in range(1, min(vm.dist[i], n + 1)):
            f.add([-level[i][k - 1]])

    def cov(c, k):
        """var: cell c covered by some corona-k copy (or None if impossible)."""
        key = (c, k)
        if key in vm.cover:
            return vm.cover[key]
        opts = [i for i in by_cell.get(c, ()) if i != 0 and vm.dist[i] <= k]
        if not opts:
            vm.cover[key] = None
            return None
        v = f.new_var()
        vm.cover[key] = v
        f.add([-v] + [level[i][k - 1] for i in opts])
        return v

    rings = [None] * m

    def ring_of(i):
        if rings[i] is None:
            rings[i] = sorted(_ring(lat, cells[i]))
        return rings[i]

    # corona adjacency: a corona-k copy touches a corona-(k-1) copy
    for i in range(1, m):
        touch_center = vm.dist[i] == 1
        if not touch_center:
            f.add([-level[i][0]])
        for k in range(2, n + 1):
            if vm.dist[i] > k:
                continue
            lits = [cov(c, k - 1) for c in ring_of(i)]
            f.add([-level[i][k - 1]] + sorted({v for v in lits if v is not None}))

    # coverage: every cell around a corona-(k-1) copy is covered at corona <= k
    for i in range(m):
        for k in range(1, n + 1):
            if i == 0:
                if k != 1:
                    continue
                guard = []
            else:
                if k - 1 < max(vm.dist[i], 1):
                    continue
                guard = [-level[i][k - 2]]
            for c in ring_of(i):
                if c in center_cells:
                    continue
                lits = [cov(c, j) for j in range(1, k + 1)]
                f.add(guard + [v for v in lits if v is not None])

    vm.counts = {
        "candidates": m,
        "core_vars": m * (n + 1),
        "aux_vars": f.num_vars - m * (n + 1),
        "vars": f.num_vars,
        "clauses": len(f.clauses),
    }
    vm._by_cell = by_cell
    return f, vm


def encode_n_patch(s: Polyform, n: int, adjacency_mode: str = "vertex"):
    """CNF whose models are n-patch candidates of ``s`` (hole-freeness not encoded)."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    return _encode(prototile(s), n, adjacency_mode == "vertex")


# -- patch geometry checks shared by the SAT refinement loop ---------------

def _defects(lat: Lattice, occupied: set):
    """Non-disk defects of a vertex-connected cell set: a list of
    (cells that would need covering, occupied cells bounding the defect)."""
    out = []
    # pinch points: corners with more than two boundary edges
    edges: dict = {}
    corner_cells: dict = {}
    for k in occupied:
        vs = lat.vertex_keys(k)
        for v in vs:
            corner_cells.setdefault(v, []).append(k)
        prev = vs[-1]
        for v in vs:
            e = (prev, v) if prev < v else (v, prev)
            edges[e] = edges.get(e, 0) + 1
            prev = v
    degree: dict = {}
    for (u, v), c in edges.items():
        if c == 1:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
    pinches = sorted(v for v, d in degree.items() if d > 2)
    if pinches:
        ring = _ring(lat, occupied)
        for v in pinches:
            around = [c for c in ring if v in lat.vertex_keys(c)]
            out.append((set(around), set(corner_cells[v])))
    # holes: bounded edge-components of the complement
    ring = _ring(lat, occupied)
    seen = set()
    K = lat.K
    unbounded_limit = len(occupied) + len(ring) + 1
    for start in sorted(ring):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        escaped = False
        while stack:
            k = stack.pop()
            for d in lat.edge_deltas[k % K]:
                nk = k + d
                if nk in occupied or nk in comp:
                    continue
                comp.add(nk)
                stack.append(nk)
            if len(comp) > unbounded_limit:
                escaped = True
                break
        if escaped:
            seen |= comp & ring
            continue
        seen |= comp
        border = set()
        for k in comp:
            for d in lat.edge_deltas[k % K]:
                if k + d in occupied:
                    border.add(k + d)
        out.append((comp, border))
    return out


def solve_n_patch(s: Polyform, n: int, budget: int | None = None, allow_holes: bool = False,
                  adjacency_mode: str = "vertex", max_refinements: int = 20_000, stats: dict | None = None):
    """An n-patch of ``s`` found with the SAT engine, or None if none exists."""
    pt = prototile(s)
    tiles = _sat_patch(pt, n, budget, allow_holes, adjacency_mode == "vertex", max_refinements, stats)
    return None if tiles is None else _to_patch(pt, s, tiles)


def _sat_patch(pt: Prototile, n, budget=None, allow_holes=False, vertex=True, max_refinements=20_000,
               stats=None):
    lat = pt.lat
    f, vm = _encode(pt, n, vertex)
    solver = satcore.Solver(f.num_vars, f.clauses)
    # coverage and counter auxiliaries follow from the placement variables
    solver.set_decision_vars(vm.used + [v for row in vm.level for v in row])
    index = {q: i for i, q in enumerate(vm.candidates)}
    by_cell = vm._by_cell
    owner_cache = {}
    refinements = 0
    stats = stats if stats is not None else {}
    stats.update(vm.counts)
    while True:
        res = solver.solve(budget)
        stats["sat_calls"] = stats.get("sat_calls", 0) + 1
        stats["conflicts"] = solver.stats["conflicts"]
        if res.status == satcore.UNSAT:
            stats["refinements"] = refinements
            return None
        if res.status == satcore.BUDGET:
            raise BudgetExceeded("SAT conflict budget exhausted", n=n, refinements=refinements)
        tiles = vm.decode(res.model)
        if allow_holes:
            return tiles
        bad = None
        for k in range(1, n + 1):
            layer = [(q, c) for q, c in tiles if c <= k]
            occ = set()
            owner = {}
            for q, c in layer:
                cs = owner_cache.get(q)
                if cs is None:
                    cs = owner_cache[q] = pt.cells_of(q)
                occ |= cs
                for x in cs:
                    owner[x] = q
            defects = _defects(lat, occ)
            if defects:
                bad = (k, layer, owner, defects)
                break
        if bad is None:
            stats["refinements"] = refinements
            return tiles
        k, layer, owner, defects = bad
        corona_of = dict(layer)
        for need, border in defects:
            bounding = sorted({owner[x] for x in border})
            fillers = sorted({i for x in need for i in by_cell.get(x, ()) if i != 0})
            lits = []
            for q in bounding:
                i = index[q]
                if i != 0:
                    lits.append(-vm.level[i][corona_of[q] - 1])
            for i in fillers:
                for j in range(1, k + 1):
                    lits.append(vm.level[i][j - 1])
            solver.add_clause(lits)
            u_lits = [-vm.used[index[q]] for q in bounding if index[q] != 0]
            u_lits += [vm.used[i] for i in fillers]
            solver.add_clause(u_lits)
        refinements += 1
        if refinements > max_refinements:
            raise BudgetExceeded("hole refinement limit reached", n=n, refinements=refinements)


def _to_patch(pt: Prototile, s: Polyform, tiles) -> PatchData:
    tiles = sorted(tiles, key=lambda t: (t[1], t[0]))
    return PatchData([pt.placement(q, s) for q, _ in tiles], [c for _, c in tiles])


# -- public API ------------------------------------------------------------

def _center_from_patch(pt: Prototile, center: PatchData):
    lat = pt.lat
    tiles = [pt.pid(p.g) for p in center.placements]
    if center.corona:
        top = max(center.corona)
        outer = [q for q, c in zip(tiles, center.corona) if c == top]
    else:
        outer = tiles
    occ = set()
    for q in tiles:
        occ |= pt.cells_of(q)
    return tiles, outer, occ


def find_surround(p: SurroundProblem, engine: str = "backtrack", allow_holes: bool = False,
                  budget: int | None = None):
    """Placements surrounding ``p.center`` (drawn from ``p.candidates`` when
    given), or None if no surround exists."""
    if engine not in ENGINES:
        raise ValidationError(f"unknown engine {engine!r}")
    if not p.center.placements:
        raise ValidationError("empty centre patch")
    base = p.center.placements[0].base
    pt = prototile(base)
    lat = pt.lat
    vertex = p.adjacency_mode == "vertex"
    tiles, outer, occ = _center_from_patch(pt, p.center)
    allowed = None
    if p.candidates:
        allowed = {pt.pid(c.g) for c in p.candidates}
    if engine == "backtrack":
        for w in _iter_surrounds(pt, tiles, occ, vertex, allow_holes, _Budget(budget)):
            if allowed is None or all(q in allowed for q in w):
                return [pt.placement(q, base) for q in w]
        return None
    w = _sat_surround(pt, tiles, occ, vertex, allow_holes, allowed, budget)
    return None if w is None else [pt.placement(q, base) for q in w]


def _sat_surround(pt: Prototile, tiles, occ, vertex, allow_holes, allowed, budget):
    """Single-corona SAT search around an arbitrary patch."""
    lat = pt.lat
    cand = _touching(pt, tiles, occ, vertex)
    if allowed is not None:
        cand = {q: c for q, c in cand.items() if q in allowed}
    pids = sorted(cand)
    f = satcore.Cnf()
    x = [f.new_var() for _ in pids]
    by_cell: dict[int, list[int]] = {}
    for i, q in enumerate(pids):
        for c in cand[q]:
            by_cell.setdefault(c, []).append(i)
    for c in sorted(by_cell):
        if len(by_cell[c]) > 1:
            f.extend(satcore.at_most_one([x[i] for i in by_cell[c]], pool=f))
    for c in sorted(_ring(lat, occ)):
        opts = by_cell.get(c, [])
        if not opts:
            return None
        f.add([x[i] for i in opts])
    solver = satcore.Solver(f.num_vars, f.clauses)
    solver.set_decision_vars(x)
    while True:
        res = solver.solve(budget)
        if res.status == satcore.UNSAT:
            return None
        if res.status == satcore.BUDGET:
            raise BudgetExceeded("SAT conflict budget exhausted")
        chosen = [i for i in range(len(pids)) if res.model[x[i]]]
        union = set(occ)
        owner = {}
        for i in chosen:
            union |= cand[pids[i]]
            for c in cand[pids[i]]:
                owner[c] = i
        defects = [] if allow_holes else _defects(lat, union)
        if not defects:
            return [pids[i] for i in chosen]
        for need, border in defects:
            lits = [-x[owner[c]] for c in sorted(border) if c in owner]
            lits += [x[i] for c in sorted(need) for i in by_cell.get(c, ())]
            solver.add_clause(sorted(set(lits)))


def n_patch_exists(s: Polyform, n: int, engine: str = "sat", allow_holes: bool = False,
                   budget: int | None = None, adjacency_mode: str = "vertex") -> PatchData | None:
    pt = prototile(s)
    vertex = adjacency_mode == "vertex"
    if engine == "sat":
        tiles = _sat_patch(pt, n, budget, allow_holes, vertex)
    elif engine == "backtrack":
        tiles = _backtrack_patch(pt, n, vertex, allow_holes, _Budget(budget))
    else:
        raise ValidationError(f"unknown engine {engine!r}")
    return None if tiles is None else _to_patch(pt, s, tiles)


def heesch_number(s: Polyform, max_corona: int = 2, engine: str = "sat", allow_holes: bool = False,
                  budget: int | None = None, adjacency_mode: str = "vertex") -> HeeschResult:
    """Iterative deepening on n: the Heesch number is exact once some level
    has no n-patch; reaching ``max_corona`` yields a lower bound."""
    if max_corona < 1:
        raise ValidationError("max_corona must be at least 1")
    if not s.is_disk:
        raise ValidationError("shape is not a topological disk")
    pt = prototile(s)
    best = _to_patch(pt, s, [(pt.identity(), 0)])
    stats: dict = {"levels": []}
    for n in range(1, max_corona + 1):
        try:
            patch = n_patch_exists(s, n, engine, allow_holes, budget, adjacency_mode)
        except BudgetExceeded as exc:
            stats["budget"] = str(exc)
            return HeeschResult(s, BUDGET, n - 1, best, engine, stats)
        stats["levels"].append(n)
        if patch is None:
            return HeeschResult(s, NONTILER, n - 1, best, engine, stats)
        best = patch
    return HeeschResult(s, BUDGET, max_corona, best, engine, stats)


def surroundable(s: Polyform, engine: str = "backtrack", budget: int | None = None) -> bool:
    """Fast unsurroundability test (Heesch number zero iff False)."""
    return n_patch_exists(s, 1, engine, budget=budget) is not None
