import json
import subprocess
import sys

import pytest

from tessella.certify import verify_patch, verify_periodic
from tessella.cli import main
from tessella.errors import FormatError
from tessella.io import (
    load_certificate, patch_from_json, patch_to_json, read_shapes, resolve_shape, shape_from_json,
)
from tessella.polyform import builtin, enumerate_polyforms


def run(*argv):
    return main([str(a) for a in argv])


def test_enumerate(tmp_path, capsys):
    assert run("enumerate", "--grid", "square", "--size", 4, "--mode", "free") == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5
    out = tmp_path / "s.jsonl"
    assert run("enumerate", "--grid", "kite", "--size", 3, "--out", out) == 0
    assert read_shapes(out) == enumerate_polyforms("kite", 3)


def test_round_trip_preserves_canonical_forms(tmp_path):
    out = tmp_path / "s.jsonl"
    run("enumerate", "--grid", "hex", "--size", 4, "--out", out)
    shapes = enumerate_polyforms("hex", 4)
    for i, s in enumerate(shapes):
        assert resolve_shape(f"{out}#{i}") == s


def test_heesch_hat(tmp_path, capsys):
    cert = tmp_path / "hat.json"
    assert run("heesch", "--shape", "hat", "--max-corona", 2, "--cert", cert) == 0
    kind, shape, patch = load_certificate(cert)
    assert kind == "patch" and shape == builtin("hat")
    assert sorted(set(patch.corona)) == [0, 1, 2]
    assert verify_patch(shape, patch)
    assert run("verify", "--in", cert) == 0


def test_heesch_exit_codes(tmp_path):
    shapes = tmp_path / "h.jsonl"
    run("enumerate", "--grid", "square", "--size", 7, "--out", shapes)
    cert = tmp_path / "c.json"
    assert run("heesch", "--shape", f"{shapes}#106", "--max-corona", 2, "--cert", cert) == 1
    assert verify_patch(*load_certificate(cert)[1:])
    assert run("heesch", "--shape", f"{shapes}#8", "--engine", "backtrack", "--max-corona", 3,
               "--budget", 2) == 3


def test_iso(tmp_path):
    cert = tmp_path / "iso.json"
    shapes = tmp_path / "t.jsonl"
    run("enumerate", "--grid", "square", "--size", 4, "--out", shapes)
    assert run("iso", "--shape", f"{shapes}#2", "--max-k", 1, "--cert", cert) == 0
    kind, shape, c = load_certificate(cert)
    assert kind == "periodic" and verify_periodic(c, shape)
    assert run("verify", "--in", cert) == 0
    assert run("iso", "--shape", "hat", "--max-k", 1) == 1


def test_classify(tmp_path, capsys):
    out, summary = tmp_path / "r.jsonl", tmp_path / "s.json"
    assert run("classify", "--grid", "square", "--size", 4, "--out", out, "--summary", summary) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["verdict"] for r in rows] == ["Periodic"] * 5
    assert json.loads(summary.read_text())["verdicts"] == {"Periodic": 5}


def test_render(tmp_path):
    cert, svg = tmp_path / "m.json", tmp_path / "m.svg"
    shapes = tmp_path / "m.jsonl"
    run("enumerate", "--grid", "square", "--size", 1, "--out", shapes)
    assert run("heesch", "--shape", shapes, "--max-corona", 1, "--cert", cert) == 0
    assert run("render", "--in", cert, "--out", svg, "--scale", 12) == 0
    assert svg.read_text().count("<path") == 9


def test_sat_round_trip(tmp_path):
    from tessella import satcore

    cnf, model = tmp_path / "f.cnf", tmp_path / "f.model"
    assert run("sat-export", "--shape", "hat", "--coronas", 1, "--out", cnf) == 0
    f = satcore.parse_dimacs(cnf.read_text())
    r = satcore.solve(f)
    model.write_text("s SATISFIABLE\n" + satcore.format_model(r.model))
    rc = run("sat-import", "--model", model, "--shape", "hat", "--coronas", 1, "--cert", tmp_path / "p.json")
    # a raw model may contain a hole; the verifier decides
    assert rc in (0, 1)
    shape, patch = patch_from_json(json.loads((tmp_path / "p.json").read_text()))
    assert bool(verify_patch(shape, patch)) == (rc == 0)
    model.write_text("s UNSATISFIABLE\n")
    assert run("sat-import", "--model", model, "--shape", "hat", "--coronas", 1) == 1


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("heesch", "--nope")
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 2


def test_malformed_files_name_line_and_field(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"format":"tessella-shape/1","grid":"square","cells":[[0,0]]}\n'
                   '{"format":"tessella-shape/1","grid":"square","cells":[[0,0],[5,5]]}\n')
    assert run("heesch", "--shape", f"{bad}#1") == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "cells" in err
    with pytest.raises(FormatError, match="format"):
        shape_from_json({"format": "tessella-shape/9", "grid": "square", "cells": [[0, 0]]})
    with pytest.raises(FormatError, match="grid"):
        shape_from_json({"format": "tessella-shape/1", "grid": "pentagon", "cells": [[0, 0]]})
    (tmp_path / "junk.json").write_text("{not json")
    assert run("render", "--in", tmp_path / "junk.json") == 2
    assert run("heesch", "--shape", tmp_path / "missing.jsonl") == 2


def test_patch_json_round_trip():
    hat = builtin("hat")
    from tessella.corona import n_patch_exists
    patch = n_patch_exists(hat, 1)
    shape, back = patch_from_json(json.loads(json.dumps(patch_to_json(patch, hat))))
    assert shape == hat
    assert [p.cells for p in back.placements] == [p.cells for p in patch.placements]
    assert back.corona == patch.corona


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tessella.cli", "enumerate", "--grid", "tri", "--size", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 3
