"""``tessella`` command line.

Exit codes: 0 success, 1 decisive negative, 2 usage or input error,
3 budget exhausted before an answer.

    enumerate   always 0
    heesch      0 when a patch with --max-corona coronas was found,
                1 when the shape has fewer coronas (exact Heesch number),
                3 when the solver budget ran out first
    iso         0 with a certificate, 1 when no k <= --max-k works,
                3 when some search was inconclusive
    classify    always 0 (verdicts are in the output)
    render      always 0
    sat-export  always 0
    sat-import  0 when the model decodes to a valid patch, 1 when the
                solver said UNSAT or the decoded patch fails verification
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corona, isohedral, satcore
from .certify import verify_patch, verify_periodic
from .classifier import batch_classify, write_results
from .errors import BudgetExceeded, FormatError, Inconclusive, ValidationError
from .io import dumps, patch_to_json, read_shapes, resolve_shape
from .lattice import CoordinateError
from .polyform import MODES, enumerate_polyforms, prototile
from .render import RenderSpec, render_svg

OK, NEGATIVE, USAGE, BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_enumerate(a) -> int:
    shapes = enumerate_polyforms(a.grid, a.size, a.mode)
    _emit("".join(dumps(s.to_json()) + "\n" for s in shapes), a.out)
    _note(f"{len(shapes)} shapes")
    return OK


def cmd_heesch(a) -> int:
    s = resolve_shape(a.shape)
    r = corona.heesch_number(s, a.max_corona, a.engine, a.allow_holes, a.budget)
    if a.cert:
        Path(a.cert).write_text(dumps(patch_to_json(r.certificate, s)) + "\n")
    levels = r.stats.get("levels", [])
    if r.status == corona.NONTILER:
        print(f"heesch {r.heesch_number} (exact)")
        return NEGATIVE
    if levels and levels[-1] == a.max_corona:
        print(f"heesch >= {r.heesch_number}")
        return OK
    print(f"heesch >= {r.heesch_number} (budget exhausted)")
    return BUDGET


def cmd_iso(a) -> int:
    s = resolve_shape(a.shape)
    r = isohedral.isohedral_number_upper(s, a.max_k, a.depth, a.budget, a.max_patches)
    if r.certificate is not None:
        if a.cert:
            Path(a.cert).write_text(dumps(r.certificate.to_json()) + "\n")
        print(f"isohedral number <= {r.k} ({r.stats.get('route', '')})")
        return OK
    if r.stats.get("inconclusive"):
        print(f"no certificate with k <= {a.max_k} (inconclusive)")
        return BUDGET
    print(f"no certificate with k <= {a.max_k}")
    return NEGATIVE


def cmd_classify(a) -> int:
    shapes = read_shapes(a.input) if a.input else None
    if shapes is None and (a.grid is None or a.size is None):
        raise ValidationError("classify needs --grid and --size, or --input")
    grid = shapes[0].grid if shapes else a.grid
    results, summary = batch_classify(grid, a.size, a.mode, a.heesch_budget, a.iso_budget, a.depth,
                                      a.jobs, a.engine, shapes=shapes)
    if a.out:
        write_results(results, summary, a.out, a.summary)
    else:
        for r in results:
            sys.stdout.write(dumps(r.to_json()) + "\n")
    _note(json.dumps(summary, sort_keys=True))
    return OK


def cmd_render(a) -> int:
    palette = tuple(a.palette.split(",")) if a.palette else None
    svg = render_svg(RenderSpec(a.input, a.scale, palette, a.stroke))
    _emit(svg, a.out)
    return OK


def cmd_sat_export(a) -> int:
    s = resolve_shape(a.shape)
    f, vm = corona.encode_n_patch(s, a.coronas, a.adjacency)
    _emit(satcore.export_dimacs(f), a.out)
    _note(f"{f.num_vars} variables, {len(f.clauses)} clauses, {len(vm.candidates)} candidate placements")
    return OK


def cmd_sat_import(a) -> int:
    s = resolve_shape(a.shape)
    status, values = satcore.parse_solver_output(Path(a.model).read_text())
    if status == satcore.UNSAT:
        print("unsatisfiable: no patch with these coronas")
        return NEGATIVE
    if status == satcore.BUDGET:
        print("solver reported UNKNOWN")
        return BUDGET
    f, vm = corona.encode_n_patch(s, a.coronas, a.adjacency)
    model = [False] * (f.num_vars + 1)
    for v, val in values.items():
        if not 1 <= v <= f.num_vars:
            raise FormatError(f"variable {v} outside 1..{f.num_vars}", field="v")
        model[v] = val
    if not satcore.check_model(f.clauses, model):
        raise FormatError("model does not satisfy the exported formula", field="v")
    patch = corona._to_patch(prototile(s), s, vm.decode(model))
    if a.cert:
        Path(a.cert).write_text(dumps(patch_to_json(patch, s)) + "\n")
    v = verify_patch(s, patch, a.adjacency, a.allow_holes)
    if not v:
        print(f"decoded patch rejected: {v.reason}")
        return NEGATIVE
    print(f"valid {a.coronas}-patch with {len(patch.placements)} placements")
    return OK


def cmd_verify(a) -> int:
    from .io import load_certificate

    kind, s, obj = load_certificate(a.input)
    if kind == "periodic":
        ok = verify_periodic(obj, s)
        reason = "" if ok else "periodic certificate rejected"
    else:
        v = verify_patch(s, obj, allow_holes=a.allow_holes)
        ok, reason = bool(v), v.reason
    print("ok" if ok else f"rejected: {reason}")
    return OK if ok else NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tessella", description="Heesch numbers, isohedral numbers and tiling certificates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("enumerate", help="list canonical polyforms as JSONL")
    e.add_argument("--grid", required=True)
    e.add_argument("--size", type=int, required=True)
    e.add_argument("--mode", default="free", choices=MODES)
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    h = sub.add_parser("heesch", help="Heesch number with a corona certificate")
    h.add_argument("--shape", required=True, help="builtin name, file, or file#index")
    h.add_argument("--engine", default="sat", choices=("sat", "backtrack"))
    h.add_argument("--max-corona", type=int, default=2)
    h.add_argument("--allow-holes", action="store_true")
    h.add_argument("--budget", type=int, help="solver conflict / search node budget")
    h.add_argument("--cert")
    h.set_defaults(func=cmd_heesch)

    i = sub.add_parser("iso", help="isohedral number upper bound with a periodic certificate")
    i.add_argument("--shape", required=True)
    i.add_argument("--max-k", type=int, default=4)
    i.add_argument("--depth", type=int, default=3)
    i.add_argument("--budget", type=int)
    i.add_argument("--max-patches", type=int, default=200_000)
    i.add_argument("--cert")
    i.set_defaults(func=cmd_iso)

    c = sub.add_parser("classify", help="batch classification")
    c.add_argument("--grid")
    c.add_argument("--size", type=int)
    c.add_argument("--input", help="classify the shapes of a JSONL file instead")
    c.add_argument("--mode", default="free", choices=MODES)
    c.add_argument("--heesch-budget", type=int, default=2)
    c.add_argument("--iso-budget", type=int, default=4)
    c.add_argument("--depth", type=int, default=3)
    c.add_argument("--engine", default="sat", choices=("sat", "backtrack"))
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out")
    c.add_argument("--summary")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("render", help="SVG of a patch or periodic certificate")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out")
    r.add_argument("--scale", type=float, default=40.0)
    r.add_argument("--stroke", type=float, default=1.0)
    r.add_argument("--palette", help="comma separated colors")
    r.set_defaults(func=cmd_render)

    x = sub.add_parser("sat-export", help="write the n-patch CNF in DIMACS form")
    x.add_argument("--shape", required=True)
    x.add_argument("--coronas", type=int, required=True)
    x.add_argument("--adjacency", default="vertex", choices=("vertex", "edge"))
    x.add_argument("--out")
    x.set_defaults(func=cmd_sat_export)

    m = sub.add_parser("sat-import", help="decode an external solver's model into a patch")
    m.add_argument("--model", required=True)
    m.add_argument("--shape", required=True)
    m.add_argument("--coronas", type=int, required=True)
    m.add_argument("--adjacency", default="vertex", choices=("vertex", "edge"))
    m.add_argument("--allow-holes", action="store_true")
    m.add_argument("--cert")
    m.set_defaults(func=cmd_sat_import)

    v = sub.add_parser("verify", help="check a certificate file")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--allow-holes", action="store_true")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        _note(f"tessella: parse error: {exc}")
        return USAGE
    except (ValidationError, CoordinateError, OSError) as exc:
        _note(f"tessella: error: {exc}")
        return USAGE
    except (BudgetExceeded, Inconclusive) as exc:
        _note(f"tessella: budget exhausted: {exc}")
        return BUDGET


if __name__ == "__main__":
    sys.exit(main())
