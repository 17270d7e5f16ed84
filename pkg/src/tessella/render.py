"""Deterministic SVG output for patches and periodic certificates."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

from .errors import ValidationError
from .io import load_certificate
from .lattice import get_lattice
from .polyform import PatchData, outline_frame

CORONA_PALETTE = ("#e8a33d", "#9ecae1", "#a1d99b", "#fdd0a2", "#bcbddc", "#fcbba1", "#c7e9c0", "#d9d9d9")
CLASS_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7")


@dataclass
class RenderSpec:
    input: str
    scale: float = 40.0
    palette: tuple[str, ...] | None = None
    stroke: float = 1.0


def _fmt(v: float) -> str:
    s = "%.6f" % v
    return "0.000000" if s == "-0.000000" else s


def placement_loops(grid, cells, scale: float = 1.0):
    """Outline loops of one placement in SVG coordinates (y pointing down)."""
    lat = get_lattice(grid)
    out = []
    for loop in outline_frame(grid, cells, merge=True):
        pts = []
        for X, Y in loop:
            x, y = lat.to_cartesian(X, Y)
            pts.append((x * scale, -y * scale))
        out.append(pts)
    return out


def _fill(i: int, corona, palette, periodic: bool) -> str:
    if periodic or corona is None:
        return palette[i % len(palette)]
    k = corona[i]
    if k == 0:
        return palette[0]
    return palette[1 + (k - 1) % (len(palette) - 1)]


def render_patch(grid, patch: PatchData, scale: float = 40.0, palette=None, stroke: float = 1.0,
                 periodic: bool = False) -> str:
    if not patch.placements:
        raise ValidationError("cannot render an empty patch")
    if palette is None:
        palette = CLASS_PALETTE if periodic else CORONA_PALETTE
    palette = tuple(palette)
    if not palette or (not periodic and len(palette) < 2):
        raise ValidationError("palette needs at least two colors")
    shapes = [placement_loops(grid, p.cells, scale) for p in patch.placements]
    xs = [x for loops in shapes for loop in loops for x, _ in loop]
    ys = [y for loops in shapes for loop in loops for _, y in loop]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, y0, w, h = x0 - mx, y0 - my, (x1 - x0) + 2 * mx, (y1 - y0) + 2 * my
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}" '
        f'width="{_fmt(w)}" height="{_fmt(h)}">',
        f'<g stroke="#000000" stroke-width={quoteattr(_fmt(stroke))} stroke-linejoin="round">',
    ]
    for i, loops in enumerate(shapes):
        d = " ".join("M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in loop) + " Z" for loop in loops)
        fill = quoteattr(_fill(i, patch.corona, palette, periodic))
        corona = "" if patch.corona is None else f' data-corona="{patch.corona[i]}"'
        lines.append(f'<path d="{d}" fill={fill} fill-rule="evenodd"{corona}/>')
    lines += ["</g>", "</svg>"]
    return "\n".join(lines) + "\n"


def render_svg(spec: RenderSpec) -> str:
    """SVG text for the patch or periodic certificate stored at ``spec.input``."""
    kind, shape, obj = load_certificate(spec.input)
    if kind == "periodic":
        return render_patch(shape.grid, obj.patch, spec.scale, spec.palette, spec.stroke, periodic=True)
    return render_patch(shape.grid, obj, spec.scale, spec.palette, spec.stroke)
