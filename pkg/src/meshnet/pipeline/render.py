"""Deterministic SVG rendering of meshes, networks and room tilings.

Active edges are colored by the distance value of their oriented half-edge
with a linear RGB ramp from ``RAMP_LOW`` (D = 0) to ``RAMP_HIGH``
(D = max D over all drawn solutions). Line width decreases with the level
index. Every number is written with a fixed number of decimals, so the same
input always gives the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from ..mesh import Mesh
from ..solver.bnb import NetworkSolution
from ..solver.solution import solution_to_dict

RAMP_LOW = (49, 54, 149)
RAMP_HIGH = (215, 48, 39)
ROOM_PALETTE = ("#fde0b2", "#c7e9c0", "#c6dbef", "#fcc5c0", "#dadaeb", "#fff7bc", "#d9d9d9")


@dataclass(frozen=True)
class RenderStyle:
    scale: float = 60.0
    margin: float = 30.0
    level_widths: tuple[float, ...] = (5.0, 3.0, 1.6)
    wire_color: str = "#bbbbbb"
    wire_width: float = 0.6
    sink_radius: float = 5.0
    legend: bool = True
    smoothed: bool = True


def ramp(t: float) -> str:
    t = min(1.0, max(0.0, t))
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(RAMP_LOW, RAMP_HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _as_doc(mesh: Mesh, sol) -> dict:
    if isinstance(sol, NetworkSolution):
        return solution_to_dict(mesh, sol)
    return sol


def render_svg(mesh: Mesh, solutions=(), style: RenderStyle | None = None, samples=()) -> str:
    """SVG text for ``mesh`` with the given solution documents drawn on top, coarse level first."""
    style = style or RenderStyle()
    docs = [_as_doc(mesh, s) for s in solutions]
    pos = mesh.positions
    xmin, ymin = pos.min(axis=0)
    xmax, ymax = pos.max(axis=0)
    sc, mg = style.scale, style.margin
    legend_h = 40.0 if style.legend and docs else 0.0
    width = (xmax - xmin) * sc + 2 * mg
    height = (ymax - ymin) * sc + 2 * mg + legend_h

    def X(x):
        return _f((x - xmin) * sc + mg)

    def Y(y):
        return _f((ymax - y) * sc + mg)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
    ]

    # rooms and obstacle faces
    out.append('<g id="faces">')
    for doc in docs:
        names = sorted({p.get("template", "") for p in doc.get("placements") or ()})
        for p in doc.get("placements") or ():
            color = ROOM_PALETTE[names.index(p.get("template", "")) % len(ROOM_PALETTE)]
            for f in p.get("faces", ()):
                pts = " ".join(f"{X(pos[v][0])},{Y(pos[v][1])}" for v in mesh.faces[f])
                out.append(f'<polygon points="{pts}" fill="{color}" stroke="none"/>')
    for f in sorted(mesh.obstacle_faces):
        pts = " ".join(f"{X(pos[v][0])},{Y(pos[v][1])}" for v in mesh.faces[f])
        out.append(f'<polygon points="{pts}" fill="#555555" fill-opacity="0.5" stroke="none"/>')
    out.append("</g>")

    out.append(f'<g id="wireframe" stroke="{style.wire_color}" stroke-width="{_f(style.wire_width)}">')
    for u, v in mesh.edges:
        out.append(f'<line x1="{X(pos[u][0])}" y1="{Y(pos[u][1])}" x2="{X(pos[v][0])}" y2="{Y(pos[v][1])}"/>')
    out.append("</g>")

    dmax = 0.0
    for doc in docs:
        for _, _, d in doc.get("orientation") or ():
            dmax = max(dmax, float(d))
    # finer levels first so coarse streets sit on top
    for level in reversed(range(len(docs))):
        doc = docs[level]
        w = style.level_widths[min(level, len(style.level_widths) - 1)]
        out.append(f'<g id="level{level}" stroke-width="{_f(w)}" stroke-linecap="round">')
        oriented = {(int(i), int(j)): float(d) for i, j, d in doc.get("orientation") or ()}
        for u, v in doc.get("active_edges") or ():
            if (u, v) in oriented:
                a, b, d = u, v, oriented[(u, v)]
            elif (v, u) in oriented:
                a, b, d = v, u, oriented[(v, u)]
            else:
                a, b, d = u, v, 0.0
            color = ramp(d / dmax if dmax > 0 else 0.0)
            out.append(
                f'<line x1="{X(pos[a][0])}" y1="{Y(pos[a][1])}" x2="{X(pos[b][0])}" y2="{Y(pos[b][1])}" '
                f'stroke="{color}"/>'
            )
        out.append("</g>")

    if style.smoothed and docs:
        geo = docs[-1].get("geometry") or {}
        if geo.get("snakes"):
            out.append('<g id="smoothed" fill="none" stroke="#222222" stroke-width="1.2">')
            for s in geo["snakes"]:
                pts = " ".join(f"{X(x)},{Y(y)}" for x, y in s["points"])
                tag = "polygon" if s.get("closed") else "polyline"
                out.append(f'<{tag} points="{pts}"/>')
            out.append("</g>")

    out.append('<g id="markers">')
    sinks = set(mesh.sinks)
    for doc in docs[-1:]:
        sinks |= {int(v) for v in doc.get("sinks") or ()}
    for v in sorted(sinks):
        out.append(f'<circle cx="{X(pos[v][0])}" cy="{Y(pos[v][1])}" r="{_f(style.sink_radius)}" fill="#d7191c"/>')
    r = style.sink_radius * 0.8
    for v in sorted(mesh.obstacle_vertices):
        out.append(
            f'<rect x="{_f(float(X(pos[v][0])) - r)}" y="{_f(float(Y(pos[v][1])) - r)}" '
            f'width="{_f(2 * r)}" height="{_f(2 * r)}" fill="#000000"/>'
        )
    for v in sorted(samples):
        cx, cy = float(X(pos[v][0])), float(Y(pos[v][1]))
        out.append(
            f'<polygon points="{_f(cx)},{_f(cy - r)} {_f(cx + r)},{_f(cy)} {_f(cx)},{_f(cy + r)} '
            f'{_f(cx - r)},{_f(cy)}" fill="#2b83ba"/>'
        )
    out.append("</g>")

    if legend_h:
        y0 = height - legend_h + 10
        x0 = mg
        bar = max(60.0, min(200.0, width - 2 * mg - 80))
        out.append('<g id="legend" font-family="sans-serif" font-size="10">')
        out.append("<defs>")
        out.append('<linearGradient id="dramp" x1="0" x2="1" y1="0" y2="0">')
        out.append(f'<stop offset="0" stop-color="{ramp(0.0)}"/>')
        out.append(f'<stop offset="1" stop-color="{ramp(1.0)}"/>')
        out.append("</linearGradient>")
        out.append("</defs>")
        out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(bar)}" height="8" fill="url(#dramp)"/>')
        out.append(f'<text x="{_f(x0)}" y="{_f(y0 + 20)}">0</text>')
        out.append(f'<text x="{_f(x0 + bar)}" y="{_f(y0 + 20)}" text-anchor="end">{escape(_f(dmax))}</text>')
        out.append(f'<text x="{_f(x0 + bar + 8)}" y="{_f(y0 + 8)}">distance value D</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
