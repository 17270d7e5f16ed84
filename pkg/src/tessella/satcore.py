"""CNF construction and a small deterministic CDCL solver.

The solver uses two watched literals (binary clauses get a dedicated
implication list), first-UIP learning, activity-ordered decisions with phase
saving and Luby restarts.  Nothing is randomized: identical input and budget
give an identical run.
"""

from __future__ import annotations

import heapq
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import FormatError, ValidationError

SAT = "SAT"
UNSAT = "UNSAT"
BUDGET = "BUDGET"


@dataclass
class Cnf:
    num_vars: int = 0
    clauses: list = field(default_factory=list)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))

    def extend(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.clauses.append(list(c))

    def validate(self) -> None:
        n = self.num_vars
        for i, c in enumerate(self.clauses):
            for lit in c:
                if not isinstance(lit, int) or lit == 0 or abs(lit) > n:
                    raise ValidationError(f"clause {i}: literal {lit!r} outside 1..{n}")


@dataclass
class SolveResult:
    status: str
    model: list | None = None
    stats: dict = field(default_factory=dict)

    def value(self, var: int) -> bool:
        return bool(self.model[var])

    def true_vars(self) -> list[int]:
        return [v for v in range(1, len(self.model)) if self.model[v]]


def check_model(clauses: Iterable[Sequence[int]], model: Sequence[bool]) -> bool:
    """Independent clause-satisfaction check."""
    true_lits = {v if model[v] else -v for v in range(1, len(model))}
    for c in clauses:
        if true_lits.isdisjoint(c):
            return False
    return True


def _luby(i: int) -> int:
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


class Solver:
    """Incremental CDCL solver.  Clauses may be added between calls to
    :meth:`solve`; learned clauses stay valid because clauses are only ever
    added."""

    def __init__(self, num_vars: int = 0, clauses: Iterable[Sequence[int]] = ()):
        self.n = 0
        self.lv: list[int] = [0, 0]          # literal value: 1 true, -1 false, 0 free
        self.level: list[int] = [0]
        self.reason: list = [None]
        self.activity: list[float] = [0.0]
        self.polarity: list[int] = [1]        # preferred literal parity (1 = negative)
        self.watches: list[list[int]] = [[], []]
        self.bins: list[list] = [[], []]
        self.clauses: list = []
        self.learned: list[int] = []
        self.lbd: dict[int, int] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.inc = 1.0
        self.heap: list = []
        self.decide: bytearray | None = None  # restricts branching when set
        self.ok = True
        self.originals: list[list[int]] = []
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0, "restarts": 0}
        self.ensure_vars(num_vars)
        for c in clauses:
            self.add_clause(c)

    # -- setup -------------------------------------------------------------
    def ensure_vars(self, n: int) -> None:
        while self.n < n:
            self.n += 1
            v = self.n
            self.lv += [0, 0]
            self.level.append(0)
            self.reason.append(None)
            # ties broken toward lower variable ids
            self.activity.append(0.0)
            self.polarity.append(1)
            self.watches += [[], []]
            self.bins += [[], []]
            if self.decide is None:
                heapq.heappush(self.heap, (0.0, v))
            else:
                self.decide.append(0)

    def add_clause(self, clause: Sequence[int]) -> bool:
        top = 0
        for x in clause:
            if type(x) is not int or x == 0:
                raise ValidationError(f"malformed literal {x!r}")
            if x > top:
                top = x
            elif -x > top:
                top = -x
        self.originals.append(list(clause))
        if not self.ok:
            return False
        if top > self.n:
            self.ensure_vars(top)
        if self.trail_lim:
            self._cancel(0)
        lv = self.lv
        lits = []
        for x in clause:
            l = 2 * x if x > 0 else -2 * x + 1
            v = lv[l]
            if v == 1 or (l ^ 1) in lits:
                return True
            if v == -1 or l in lits:
                continue
            lits.append(l)
        if not lits:
            self.ok = False
            return False
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self._attach(lits)
        return True

    def _attach(self, lits: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        if len(lits) == 2:
            a, b = lits
            self.bins[a].append((b, ci))
            self.bins[b].append((a, ci))
        else:
            self.watches[lits[0]].append(ci)
            self.watches[lits[1]].append(ci)
        return ci

    # -- core --------------------------------------------------------------
    def _enqueue(self, lit: int, reason) -> None:
        self.lv[lit] = 1
        self.lv[lit ^ 1] = -1
        v = lit >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _cancel(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        lim = self.trail_lim[lvl]
        lv, polarity, reason, heap, act = self.lv, self.polarity, self.reason, self.heap, self.activity
        decide = self.decide
        for lit in self.trail[lim:]:
            v = lit >> 1
            lv[lit] = 0
            lv[lit ^ 1] = 0
            polarity[v] = lit & 1
            reason[v] = None
            if decide is None or decide[v]:
                heapq.heappush(heap, (-act[v], v))
        del self.trail[lim:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, lim)

    def _propagate(self):
        lv = self.lv
        trail = self.trail
        clauses = self.clauses
        watches = self.watches
        bins = self.bins
        level = self.level
        reason = self.reason
        nlim = len(self.trail_lim)
        props = 0
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            props += 1
            false_lit = p ^ 1
            for other, ci in bins[false_lit]:
                val = lv[other]
                if val == -1:
                    self.stats["propagations"] += props
                    return ci
                if val == 0:
                    lv[other] = 1
                    lv[other ^ 1] = -1
                    v = other >> 1
                    level[v] = nlim
                    reason[v] = ci
                    trail.append(other)
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if lv[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if lv[lk] != -1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if lv[first] == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.stats["propagations"] += props
                        return ci
                    lv[first] = 1
                    lv[first ^ 1] = -1
                    v = first >> 1
                    level[v] = nlim
                    reason[v] = ci
                    trail.append(first)
            del ws[j:]
        self.stats["propagations"] += props
        return None

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self.inc *= 1e-100
            self._rebuild_heap()
        elif self.lv[2 * v] == 0 and (self.decide is None or self.decide[v]):
            heapq.heappush(self.heap, (-act[v], v))

    def _analyze(self, confl: int):
        seen = bytearray(self.n + 1)
        level = self.level
        reason = self.reason
        clauses = self.clauses
        trail = self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        counter = 0
        p = None
        idx = len(trail) - 1
        ci = confl
        while True:
            c = clauses[ci]
            for q in c:
                if p is not None and q == p:
                    continue
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            ci = reason[v]
        learnt[0] = p ^ 1
        # local minimization: drop literals implied by others in the clause
        for q in learnt[1:]:
            seen[q >> 1] = 1
        out = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None:
                out.append(q)
                continue
            c = clauses[r]
            if all(seen[x >> 1] or level[x >> 1] == 0 for x in c if x != q ^ 1):
                continue
            out.append(q)
        if len(out) == 1:
            back = 0
        else:
            mi = max(range(1, len(out)), key=lambda k: (level[out[k] >> 1], -k))
            out[1], out[mi] = out[mi], out[1]
            back = level[out[1] >> 1]
        lbd = len({level[q >> 1] for q in out})
        return out, back, lbd

    def _reduce_db(self) -> None:
        locked = set()
        for lit in self.trail:
            r = self.reason[lit >> 1]
            if r is not None:
                locked.add(r)
        cand = [ci for ci in self.learned if ci not in locked and len(self.clauses[ci]) > 2
                and self.lbd.get(ci, 99) > 2]
        cand.sort(key=lambda ci: (self.lbd.get(ci, 99), len(self.clauses[ci]), ci), reverse=True)
        drop = set(cand[: len(cand) // 2])
        for ci in drop:
            self.clauses[ci] = None
            self.lbd.pop(ci, None)
        self.learned = [ci for ci in self.learned if ci not in drop]

    def _rebuild_heap(self) -> None:
        lv, act, decide = self.lv, self.activity, self.decide
        self.heap = [(-act[u], u) for u in range(1, self.n + 1)
                     if lv[2 * u] == 0 and (decide is None or decide[u])]
        heapq.heapify(self.heap)

    def set_decision_vars(self, variables: Iterable[int] | None) -> None:
        """Branch only on ``variables``; the rest must be forced by
        propagation or be safely completed to true once every decision
        variable is assigned (the completed model is still checked, and the
        restriction is dropped if the check fails)."""
        if variables is None:
            self.decide = None
        else:
            mask = bytearray(self.n + 1)
            for v in variables:
                mask[v] = 1
            self.decide = mask
        self._rebuild_heap()

    def _pick(self) -> int:
        lv = self.lv
        act = self.activity
        decide = self.decide
        if len(self.heap) > 4 * self.n + 1000:
            self._rebuild_heap()
        heap = self.heap
        while heap:
            a, v = heapq.heappop(heap)
            if lv[2 * v] == 0 and -a == act[v]:
                return v
        for v in range(1, self.n + 1):
            if lv[2 * v] == 0 and (decide is None or decide[v]):
                return v
        return 0

    def solve(self, budget: int | None = None, assumptions: Sequence[int] = ()) -> SolveResult:
        """Run until SAT, UNSAT or ``budget`` conflicts (counted per call)."""
        if not self.ok:
            return SolveResult(UNSAT, None, dict(self.stats))
        self._cancel(0)
        if self._propagate() is not None:
            self.ok = False
            return SolveResult(UNSAT, None, dict(self.stats))
        conflicts = 0
        restart_no = 1
        next_restart = 100 * _luby(restart_no)
        since_restart = 0
        max_learned = max(2000, len(self.clauses) // 3)
        assume = [2 * a if a > 0 else -2 * a + 1 for a in assumptions]
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                since_restart += 1
                self.stats["conflicts"] += 1
                if not self.trail_lim:
                    self.ok = False
                    return SolveResult(UNSAT, None, dict(self.stats))
                if len(self.trail_lim) <= len(assume):
                    self._cancel(0)
                    return SolveResult(UNSAT, None, dict(self.stats, assumption_conflict=True))
                learnt, back, lbd = self._analyze(confl)
                self._cancel(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    ci = self._attach(learnt)
                    self.learned.append(ci)
                    self.lbd[ci] = lbd
                    self._enqueue(learnt[0], ci)
                self.inc *= 1.0 / 0.95
                if budget is not None and conflicts >= budget:
                    self._cancel(0)
                    return SolveResult(BUDGET, None, dict(self.stats))
                continue
            if since_restart >= next_restart:
                since_restart = 0
                restart_no += 1
                next_restart = 100 * _luby(restart_no)
                self.stats["restarts"] += 1
                self._cancel(0)
                continue
            if len(self.learned) > max_learned:
                self._reduce_db()
                max_learned = int(max_learned * 1.1)
            lit = None
            while len(self.trail_lim) < len(assume):
                a = assume[len(self.trail_lim)]
                if self.lv[a] == -1:
                    self._cancel(0)
                    return SolveResult(UNSAT, None, dict(self.stats, assumption_conflict=True))
                self.trail_lim.append(len(self.trail))
                if self.lv[a] == 0:
                    lit = a
                    break
            if lit is None:
                v = self._pick()
                if v == 0:
                    model = [False] * (self.n + 1)
                    for u in range(1, self.n + 1):
                        model[u] = self.lv[2 * u] != -1
                    if not check_model(self.originals, model):
                        if self.decide is None:
                            raise AssertionError("solver produced a model that violates a clause")
                        self.stats["completion_failures"] = self.stats.get("completion_failures", 0) + 1
                        self.set_decision_vars(None)
                        continue
                    self._cancel(0)
                    return SolveResult(SAT, model, dict(self.stats))
                self.stats["decisions"] += 1
                self.trail_lim.append(len(self.trail))
                lit = 2 * v + self.polarity[v]
            self._enqueue(lit, None)


def solve(f: Cnf, budget: int | None = None) -> SolveResult:
    """Solve ``f`` with the built-in solver (or ``$TESSELLA_SAT`` when set)."""
    f.validate()
    external = os.environ.get("TESSELLA_SAT")
    if external:
        return solve_external(f, external)
    solver = Solver(f.num_vars, f.clauses)
    res = solver.solve(budget)
    if res.model is not None and len(res.model) < f.num_vars + 1:
        res.model += [False] * (f.num_vars + 1 - len(res.model))
    return res


def add_blocking_clause(f: Cnf, model_subset: Iterable[int]) -> Cnf:
    """Copy of ``f`` with a clause forbidding all literals of ``model_subset``
    from holding together."""
    lits = sorted(set(model_subset), key=lambda x: (abs(x), x))
    if not lits:
        raise ValidationError("blocking clause needs a non-empty literal set")
    for x in lits:
        if x == 0 or abs(x) > f.num_vars:
            raise ValidationError(f"literal {x} outside 1..{f.num_vars}")
    return Cnf(f.num_vars, [list(c) for c in f.clauses] + [[-x for x in lits]])


def at_most_one(vars: Sequence[int], method: str | None = None, pool: Cnf | None = None) -> list[list[int]]:
    """Clauses allowing at most one of ``vars`` to be true.

    ``method`` defaults to pairwise for up to eight variables and sequential
    (with auxiliaries drawn from ``pool``) above that.
    """
    vars = list(vars)
    if not vars:
        raise ValidationError("at_most_one needs at least one variable")
    if method is None:
        method = "pairwise" if len(vars) <= 8 or pool is None else "sequential"
    if method == "pairwise":
        return [[-vars[i], -vars[j]] for i in range(len(vars)) for j in range(i + 1, len(vars))]
    if method != "sequential":
        raise ValidationError(f"unknown at_most_one method {method!r}")
    if pool is None:
        raise ValidationError("sequential encoding needs a pool for auxiliary variables")
    n = len(vars)
    if n == 1:
        return []
    s = [pool.new_var() for _ in range(n - 1)]
    out = [[-vars[0], s[0]]]
    for i in range(1, n - 1):
        out += [[-vars[i], s[i]], [-s[i - 1], s[i]], [-vars[i], -s[i - 1]]]
    out.append([-vars[n - 1], -s[n - 2]])
    return out


# -- DIMACS ----------------------------------------------------------------

def export_dimacs(f: Cnf) -> str:
    f.validate()
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    lines += [" ".join(str(x) for x in c) + " 0" for c in f.clauses]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Cnf:
    header = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError("bad DIMACS header", line=no)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise FormatError("bad DIMACS header", line=no) from None
            continue
        if header is None:
            raise FormatError("clause before DIMACS header", line=no)
        for tok in line.split():
            try:
                x = int(tok)
            except ValueError:
                raise FormatError(f"bad literal {tok!r}", line=no) from None
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
    if header is None:
        raise FormatError("missing DIMACS header")
    if cur:
        clauses.append(cur)
    return Cnf(header[0], clauses)


def parse_solver_output(text: str) -> tuple[str | None, dict[int, bool]]:
    """Parse ``s``/``v`` lines of a SAT-competition style solver output."""
    status = None
    model: dict[int, bool] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("s "):
            word = line[2:].strip()
            if word == "SATISFIABLE":
                status = SAT
            elif word == "UNSATISFIABLE":
                status = UNSAT
            elif word == "UNKNOWN":
                status = BUDGET
            else:
                raise FormatError(f"unknown solver status {word!r}", line=no)
        elif line.startswith("v"):
            for tok in line[1:].split():
                try:
                    x = int(tok)
                except ValueError:
                    raise FormatError(f"bad literal {tok!r} in v-line", line=no) from None
                if x != 0:
                    model[abs(x)] = x > 0
        else:
            raise FormatError(f"unexpected solver output {line[:30]!r}", line=no)
    return status, model


def import_dimacs_model(text: str) -> dict[int, bool]:
    return parse_solver_output(text)[1]


def format_model(model: Sequence[bool] | dict) -> str:
    if isinstance(model, dict):
        items = sorted(model.items())
    else:
        items = [(v, bool(model[v])) for v in range(1, len(model))]
    return "v " + " ".join(str(v if val else -v) for v, val in items) + " 0\n"


def solve_external(f: Cnf, executable: str, timeout: float | None = None) -> SolveResult:
    """Run an external DIMACS solver and parse its answer."""
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(export_dimacs(f))
        path = fh.name
    try:
        proc = subprocess.run([executable, path], capture_output=True, text=True, timeout=timeout)
    finally:
        os.unlink(path)
    status, values = parse_solver_output(proc.stdout)
    if status is None:
        raise FormatError(f"external solver {executable!r} reported no status line")
    if status != SAT:
        return SolveResult(status, None, {"external": executable})
    model = [False] * (f.num_vars + 1)
    for v, val in values.items():
        if 1 <= v <= f.num_vars:
            model[v] = val
    if not check_model(f.clauses, model):
        raise FormatError("external solver model violates the formula")
    return SolveResult(SAT, model, {"external": executable})
