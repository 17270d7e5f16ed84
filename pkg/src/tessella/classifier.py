"""Interleaved Heesch / isohedral ladders and the batch runner.

For n = 1, 2, ... the isohedral rung (k = n copies) runs before the Heesch
rung (an n-patch).  A missing n-patch proves a non-tiler with Heesch number
n - 1; a verified periodic certificate proves a periodic tiler.  When both
budgets run out the shape is reported as an aperiodic candidate, which is a
statement about the budgets and not a claim of aperiodicity.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool

from .corona import n_patch_exists
from .errors import BudgetExceeded, ValidationError
from .io import dumps, patch_to_json
from .isohedral import PeriodicCertificate, iso_step
from .polyform import PatchData, Polyform, enumerate_polyforms, prototile

NON_TILER = "NonTiler"
PERIODIC = "Periodic"
CANDIDATE = "Candidate"
ERROR = "Error"

CANDIDATE_LABEL = "aperiodic candidate (budgets exhausted)"


@dataclass
class Classification:
    shape: Polyform
    verdict: str
    heesch: int | None = None
    heesch_exact: bool = False
    iso_upper: int | None = None
    iso_budget: int = 0
    corona: PatchData | None = None
    periodic: PeriodicCertificate | None = None
    decided_at: int | None = None
    incomplete: bool = False
    budgets_used: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def iso_label(self) -> str:
        if self.iso_upper is not None:
            return str(self.iso_upper)
        return f">{self.iso_budget}"

    @property
    def label(self) -> str:
        if self.verdict == CANDIDATE:
            return CANDIDATE_LABEL
        return self.verdict

    def to_json(self) -> dict:
        certs = {}
        if self.corona is not None:
            certs["corona"] = patch_to_json(self.corona, self.shape)
        if self.periodic is not None:
            certs["periodic"] = self.periodic.to_json()
        out = {
            "shape": self.shape.to_json(),
            "verdict": self.verdict,
            "heesch": self.heesch,
            "heesch_exact": self.heesch_exact,
            "iso_upper": self.iso_upper if self.iso_upper is not None else self.iso_label,
            "decided_at": self.decided_at,
            "incomplete": self.incomplete,
            "budgets_used": self.budgets_used,
            "certificates": certs,
        }
        if self.error:
            out["error"] = self.error
        return out


def _center_only(s: Polyform) -> PatchData:
    pt = prototile(s)
    return PatchData([pt.placement(pt.identity(), s)], [0])


def classify(s: Polyform, heesch_budget: int = 2, iso_budget: int = 4, depth: int = 3,
             engine: str = "sat", iso_first: bool = True, solver_budget: int | None = None,
             max_patches: int | None = 200_000) -> Classification:
    """Classify ``s`` as NonTiler, Periodic or Candidate within the budgets."""
    if heesch_budget < 1 or iso_budget < 1:
        raise ValidationError("budgets must be at least 1")
    if not s.is_disk:
        raise ValidationError("shape is not simply connected")
    used = {"heesch_levels": 0, "iso_levels": 0, "patches": {}}
    incomplete = False
    best = _center_only(s)
    heesch_done = 0

    # unsurroundable shapes are settled before anything else
    first = n_patch_exists(s, 1, "backtrack", budget=solver_budget)
    used["heesch_levels"] = 1
    if first is None:
        return Classification(s, NON_TILER, 0, True, None, iso_budget, best, None, 0, False, used)
    best, heesch_done = first, 1

    def heesch_rung(n):
        nonlocal best, heesch_done, incomplete
        if n <= heesch_done:
            return None
        try:
            patch = n_patch_exists(s, n, engine, budget=solver_budget)
        except BudgetExceeded:
            incomplete = True
            heesch_done = heesch_budget + 1  # stop climbing; lower bound stays
            return None
        used["heesch_levels"] = n
        if patch is None:
            return Classification(s, NON_TILER, n - 1, True, None, iso_budget, best, None, n, incomplete, used)
        best, heesch_done = patch, n
        return None

    def iso_rung(n):
        nonlocal incomplete
        try:
            step = iso_step(s, n, depth, solver_budget, max_patches)
        except BudgetExceeded:
            incomplete = True
            return None
        used["iso_levels"] = n
        used["patches"][str(n)] = step.patches
        incomplete = incomplete or step.inconclusive
        if step.certificate is not None:
            return Classification(s, PERIODIC, None, False, n, iso_budget, None, step.certificate, n,
                                  incomplete, used)
        return None

    for n in range(1, max(heesch_budget, iso_budget) + 1):
        rungs = []
        if n <= iso_budget:
            rungs.append(iso_rung)
        if n <= heesch_budget:
            rungs.append(heesch_rung)
        if not iso_first:
            rungs.reverse()
        for rung in rungs:
            out = rung(n)
            if out is not None:
                return out
    return Classification(s, CANDIDATE, heesch_done if heesch_done <= heesch_budget else heesch_budget,
                          False, None, iso_budget, best, None, None, incomplete, used)


# -- batch -----------------------------------------------------------------

def _classify_job(args):
    s, kw = args
    try:
        return classify(s, **kw)
    except (ValidationError, BudgetExceeded) as exc:
        return Classification(s, ERROR, error=str(exc), iso_budget=kw.get("iso_budget", 0))


def summarize(results) -> dict:
    verdicts = Counter(r.verdict for r in results)
    heesch = Counter(str(r.heesch) for r in results if r.verdict == NON_TILER)
    iso = Counter(str(r.iso_upper) for r in results if r.verdict == PERIODIC)
    return {
        "shapes": len(results),
        "verdicts": dict(sorted(verdicts.items())),
        "heesch": dict(sorted(heesch.items())),
        "iso_upper": dict(sorted(iso.items())),
        "incomplete": sum(1 for r in results if r.incomplete),
    }


def batch_classify(grid, n: int, mode: str = "free", heesch_budget: int = 2, iso_budget: int = 4,
                   depth: int = 3, jobs: int = 1, engine: str = "sat", shapes=None):
    """Classify every canonical polyform of size ``n``; results follow the
    canonical enumeration order whatever ``jobs`` is."""
    if shapes is None:
        shapes = enumerate_polyforms(grid, n, mode)
    kw = dict(heesch_budget=heesch_budget, iso_budget=iso_budget, depth=depth, engine=engine)
    tasks = [(s, kw) for s in shapes]
    if jobs > 1 and len(tasks) > 1:
        with Pool(jobs) as pool:
            results = pool.map(_classify_job, tasks, chunksize=1)
    else:
        results = [_classify_job(t) for t in tasks]
    return results, summarize(results)


def write_results(results, summary, out_path, summary_path=None) -> None:
    with open(out_path, "w") as fh:
        for r in results:
            fh.write(dumps(r.to_json()) + "\n")
    if summary_path is not None:
        with open(summary_path, "w") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
