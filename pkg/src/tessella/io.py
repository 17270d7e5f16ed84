"""Versioned JSON and JSONL file formats."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import FormatError, ValidationError
from .lattice import CoordinateError, GridKind, Isometry, get_lattice
from .polyform import BUILTIN_NAMES, PatchData, Polyform, builtin, make_polyform, place

SHAPE_FORMAT = "tessella-shape/1"
PATCH_FORMAT = "tessella-patch/1"
PERIODIC_FORMAT = "tessella-periodic/1"


def dumps(obj) -> str:
    """Stable serialization used for every emitted file."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _expect_format(doc, fmt, line=None):
    if not isinstance(doc, dict):
        raise FormatError("expected a JSON object", line=line)
    got = doc.get("format")
    if got != fmt:
        raise FormatError(f"unsupported format {got!r}, expected {fmt!r}", line=line, field="format")


# -- shapes ----------------------------------------------------------------

def shape_to_json(s: Polyform) -> dict:
    return s.to_json()


def shape_from_json(doc, line=None, mode: str = "free") -> Polyform:
    _expect_format(doc, SHAPE_FORMAT, line)
    try:
        grid = GridKind.parse(doc["grid"])
    except KeyError:
        raise FormatError("missing grid", line=line, field="grid") from None
    except ValueError as exc:
        raise FormatError(str(exc), line=line, field="grid") from None
    cells = doc.get("cells")
    if not isinstance(cells, list) or not cells:
        raise FormatError("cells must be a non-empty list", line=line, field="cells")
    try:
        return make_polyform(grid, [tuple(c) for c in cells], doc.get("mode", mode))
    except (ValidationError, CoordinateError, TypeError) as exc:
        raise FormatError(str(exc), line=line, field="cells") from None


def read_shapes(path) -> list[Polyform]:
    """All shapes in a JSON or JSONL file."""
    text = Path(path).read_text()
    stripped = text.strip()
    if not stripped:
        raise FormatError("empty shape file")
    if "\n" not in stripped:
        return [shape_from_json(_loads(stripped, 1), 1)]
    out = []
    for no, line in enumerate(text.splitlines(), 1):
        if line.strip():
            out.append(shape_from_json(_loads(line, no), no))
    return out


def _loads(text, line=None):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", line=line if line is not None else exc.lineno) from None


def resolve_shape(spec: str) -> Polyform:
    """A builtin name, a file path, or ``path#index`` into a JSONL file."""
    if spec in BUILTIN_NAMES:
        return builtin(spec)
    path, _, index = spec.partition("#")
    shapes = read_shapes(path)
    i = int(index) if index else 0
    if not 0 <= i < len(shapes):
        raise ValidationError(f"shape index {i} out of range (file holds {len(shapes)})")
    return shapes[i]


# -- patches ---------------------------------------------------------------

def patch_to_json(patch: PatchData, shape: Polyform | None = None) -> dict:
    shape = shape or patch.placements[0].base
    rows = []
    for idx, p in enumerate(patch.placements):
        row = {"point": p.g.point, "t": list(p.g.t)}
        if patch.corona is not None:
            row["corona"] = patch.corona[idx]
        rows.append(row)
    return {"format": PATCH_FORMAT, "shape": shape.to_json(), "placements": rows}


def patch_from_json(doc) -> tuple[Polyform, PatchData]:
    _expect_format(doc, PATCH_FORMAT)
    if "shape" not in doc:
        raise FormatError("missing shape", field="shape")
    shape = shape_from_json(doc["shape"])
    rows = doc.get("placements")
    if not isinstance(rows, list) or not rows:
        raise FormatError("placements must be a non-empty list", field="placements")
    lat = get_lattice(shape.grid)
    places, coronas = [], []
    for i, row in enumerate(rows):
        try:
            point = int(row["point"])
            t = tuple(int(v) for v in row["t"])
            if len(t) != 2 or not 0 <= point < lat.order:
                raise ValueError
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"bad placement #{i}", field="placements") from None
        places.append(place(shape, Isometry(point, t)))
        if "corona" in row:
            coronas.append(int(row["corona"]))
    if coronas and len(coronas) != len(places):
        raise FormatError("corona given for some placements only", field="placements")
    return shape, PatchData(places, coronas or None)


def periodic_from_json(doc):
    from .isohedral import PeriodicCertificate

    _expect_format(doc, PERIODIC_FORMAT)
    shape, patch = patch_from_json(doc.get("patch"))
    try:
        t1 = tuple(int(v) for v in doc["t1"])
        t2 = tuple(int(v) for v in doc["t2"])
        classes = int(doc["classes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad periodic certificate: {exc}") from None
    return shape, PeriodicCertificate(patch, t1, t2, classes)


def read_json(path):
    text = Path(path).read_text()
    return _loads(text)


def load_certificate(path):
    """(kind, shape, object) for a patch or periodic certificate file."""
    doc = read_json(path)
    fmt = doc.get("format") if isinstance(doc, dict) else None
    if fmt == PATCH_FORMAT:
        shape, patch = patch_from_json(doc)
        return "patch", shape, patch
    if fmt == PERIODIC_FORMAT:
        shape, cert = periodic_from_json(doc)
        return "periodic", shape, cert
    raise FormatError(f"unsupported format {fmt!r}", field="format")
