"""Room templates, placement enumeration and the exact-cover tiling rows."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import yaml

from .mesh import Mesh
from .model.ipmodel import IpModel, ModelError

# quad sides in counter-clockwise order and the grid step across each
SIDE_STEP = ((0, -1), (1, 0), (0, 1), (-1, 0))


class TilingError(ModelError):
    pass


@dataclass(frozen=True)
class RoomTemplate:
    name: str
    cells: frozenset[tuple[int, int]]
    rotations: bool = True
    reflections: bool = True
    min_count: int = 0
    max_count: int | None = None

    def __post_init__(self):
        cells = frozenset((int(x), int(y)) for x, y in self.cells)
        if not cells:
            raise TilingError(f"template {self.name!r} is empty")
        object.__setattr__(self, "cells", cells)
        start = min(cells)
        seen = {start}
        stack = [start]
        while stack:
            x, y = stack.pop()
            for dx, dy in SIDE_STEP:
                c = (x + dx, y + dy)
                if c in cells and c not in seen:
                    seen.add(c)
                    stack.append(c)
        if seen != cells:
            raise TilingError(f"template {self.name!r} is not edge-connected")
        if self.min_count < 0:
            raise TilingError(f"template {self.name!r} has a negative minimum count")
        if self.max_count is not None and self.min_count > self.max_count:
            raise TilingError(f"template {self.name!r} has min count > max count")

    @property
    def bounded(self) -> bool:
        return self.min_count > 0 or self.max_count is not None

    def variants(self) -> list[tuple[tuple[int, int], ...]]:
        """Distinct normalised shapes under the allowed symmetries."""
        shapes = [self.cells]
        if self.rotations:
            cur = self.cells
            for _ in range(3):
                cur = frozenset((-y, x) for x, y in cur)
                shapes.append(cur)
        if self.reflections:
            shapes += [frozenset((-x, y) for x, y in s) for s in list(shapes)]
        out = []
        seen = set()
        for s in shapes:
            mx = min(x for x, _ in s)
            my = min(y for _, y in s)
            norm = tuple(sorted((x - mx, y - my) for x, y in s))
            if norm not in seen:
                seen.add(norm)
                out.append(norm)
        return out


def rectangle(name: str, w: int, h: int, **kw) -> RoomTemplate:
    return RoomTemplate(name, frozenset((x, y) for x in range(w) for y in range(h)), **kw)


@dataclass(frozen=True)
class RoomPlacement:
    template: int
    faces: tuple[int, ...]
    inner_edges: tuple[int, ...]
    boundary_edges: tuple[int, ...]
    var: int = -1


def load_templates(text: str) -> list[RoomTemplate]:
    """Parse a YAML template catalogue (``templates:`` list)."""
    doc = yaml.safe_load(text) or {}
    if set(doc) - {"templates"}:
        raise TilingError(f"unknown catalogue keys: {sorted(set(doc) - {'templates'})}")
    out = []
    for entry in doc.get("templates") or ():
        unknown = set(entry) - {"name", "cells", "size", "rotations", "reflections", "count"}
        if unknown:
            raise TilingError(f"unknown template keys: {sorted(unknown)}")
        name = str(entry["name"])
        if "size" in entry:
            w, h = entry["size"]
            cells = frozenset((x, y) for x in range(int(w)) for y in range(int(h)))
        else:
            cells = frozenset(tuple(c) for c in entry["cells"])
        lo, hi = 0, None
        if "count" in entry:
            count = entry["count"]
            if isinstance(count, dict):
                lo, hi = int(count.get("min", 0)), count.get("max")
            elif isinstance(count, int):
                lo, hi = count, count
            else:
                lo, hi = count
            hi = None if hi is None else int(hi)
        out.append(
            RoomTemplate(
                name,
                cells,
                rotations=bool(entry.get("rotations", True)),
                reflections=bool(entry.get("reflections", True)),
                min_count=int(lo),
                max_count=hi,
            )
        )
    if not out:
        raise TilingError("template catalogue is empty")
    return out


def dump_templates(templates: list[RoomTemplate]) -> str:
    rows = []
    for t in templates:
        entry = {
            "name": t.name,
            "cells": [list(c) for c in sorted(t.cells)],
            "rotations": t.rotations,
            "reflections": t.reflections,
        }
        if t.bounded:
            entry["count"] = [t.min_count, t.max_count]
        rows.append(entry)
    return yaml.safe_dump({"templates": rows}, sort_keys=False)


def grid_addressing(mesh: Mesh) -> dict[int, tuple[int, int]]:
    """Integer ``(x, y)`` coordinates for every face, derived from face adjacency.

    Raises :class:`TilingError` unless the faces are quads forming a subset
    of a regular grid.
    """
    for f, face in enumerate(mesh.faces):
        if len(face) != 4:
            raise TilingError(f"face {f} is not a quad; the mesh is not grid-addressable")
    coords = {0: (0, 0)}
    offset = {0: 0}
    taken = {(0, 0): 0}
    queue = deque([0])
    while queue:
        f = queue.popleft()
        x, y = coords[f]
        for k, h in enumerate(mesh.face_half_edges(f)):
            g = mesh.he_face[h ^ 1]
            if g < 0:
                continue
            side = (k + offset[f]) % 4
            dx, dy = SIDE_STEP[side]
            c = (x + dx, y + dy)
            k2 = mesh.face_half_edges(g).index(h ^ 1)
            o2 = ((side + 2) - k2) % 4
            if g in coords:
                if coords[g] != c or offset[g] != o2:
                    raise TilingError("face adjacency is inconsistent with a regular grid")
                continue
            if c in taken:
                raise TilingError(f"faces {taken[c]} and {g} map to the same grid cell")
            coords[g] = c
            offset[g] = o2
            taken[c] = g
            queue.append(g)
    if len(coords) != mesh.n_faces:
        raise TilingError("faces are not edge-connected; the mesh is not grid-addressable")
    return coords


def placement_edges(mesh: Mesh, faces) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """``(inner, boundary)`` edges of a face set."""
    fs = set(faces)
    count: dict[int, int] = {}
    for f in fs:
        for e in mesh.face_edges(f):
            count[e] = count.get(e, 0) + 1
    inner = tuple(sorted(e for e, n in count.items() if n == 2))
    boundary = tuple(sorted(e for e, n in count.items() if n == 1))
    return inner, boundary


def enumerate_placements(mesh: Mesh, templates: list[RoomTemplate]) -> list[RoomPlacement]:
    """Every placement of every template variant that avoids obstacle faces."""
    coords = grid_addressing(mesh)
    at = {c: f for f, c in coords.items()}
    anchors = sorted(at)
    seen = set()
    out = []
    for t, tmpl in enumerate(templates):
        for shape in tmpl.variants():
            for ax, ay in anchors:
                faces = []
                for cx, cy in shape:
                    f = at.get((ax + cx, ay + cy))
                    if f is None or f in mesh.obstacle_faces:
                        break
                    faces.append(f)
                else:
                    key = (t, frozenset(faces))
                    if key in seen or not _faces_connected(mesh, faces):
                        continue
                    seen.add(key)
                    inner, boundary = placement_edges(mesh, faces)
                    out.append(RoomPlacement(t, tuple(sorted(faces)), inner, boundary))
    out.sort(key=lambda p: (p.template, p.faces))
    return out


def _faces_connected(mesh: Mesh, faces) -> bool:
    fs = set(faces)
    start = min(fs)
    seen = {start}
    stack = [start]
    while stack:
        f = stack.pop()
        for g in mesh.face_neighbors(f):
            if g in fs and g not in seen:
                seen.add(g)
                stack.append(g)
    return seen == fs


def build_tiling_constraints(
    mesh: Mesh, placements: list[RoomPlacement], mode: str, model: IpModel
) -> IpModel:
    """Exact cover of faces plus the room/network edge-role rows for ``mode``."""
    if mode not in ("floorplan", "gamelevel"):
        raise TilingError(f"tiling mode must be floorplan or gamelevel, got {mode!r}")
    E = model.meta["edge"]
    rooms = []
    for x, p in enumerate(placements):
        rooms.append(replace(p, var=model.add_var(f"R_{x}")))
    model.meta["rooms"] = rooms
    model.meta["room"] = [p.var for p in rooms]
    model.meta["primary"] = list(model.meta["primary"]) + [p.var for p in rooms]

    covering: dict[int, list[int]] = {f: [] for f in range(mesh.n_faces)}
    for p in rooms:
        for f in p.faces:
            covering[f].append(p.var)
    for f in range(mesh.n_faces):
        obstacle = f in mesh.obstacle_faces
        if not covering[f] and not obstacle:
            raise TilingError(f"face {f} is covered by no room placement")
        if covering[f] or not obstacle:
            model.add_row(f"tile_{f}", [(r, 1) for r in covering[f]], "=", 0 if obstacle else 1, "tiling")

    for x, p in enumerate(rooms):
        ni, nb = len(p.inner_edges), len(p.boundary_edges)
        if mode == "floorplan":
            if ni:
                model.add_row(
                    f"room_inner_{x}", [(p.var, ni)] + [(E[e], 1) for e in p.inner_edges], "<=", ni, "room_inner"
                )
            model.add_row(f"room_door_{x}", [(p.var, 1)] + [(E[e], -1) for e in p.boundary_edges], "<=", 0, "room_door")
        else:
            model.add_row(
                f"block_inner_{x}", [(p.var, 1)] + [(E[e], -1) for e in p.inner_edges], "<=", 0, "block_inner"
            )
            model.add_row(
                f"block_wall_{x}", [(p.var, nb)] + [(E[e], 1) for e in p.boundary_edges], "<=", nb, "block_wall"
            )
    return model


def build_room_count_constraints(
    placements: list[RoomPlacement], templates: list[RoomTemplate], model: IpModel
) -> IpModel:
    """Occurrence bounds per template over its placements."""
    for t, tmpl in enumerate(templates):
        if tmpl.max_count is not None and tmpl.min_count > tmpl.max_count:
            raise TilingError(f"template {tmpl.name!r} has min count > max count")
        if not tmpl.bounded:
            continue
        rs = [p.var for p in placements if p.template == t]
        if any(r < 0 for r in rs):
            raise TilingError("placements carry no indicator variables; build the tiling rows first")
        terms = [(r, 1) for r in rs]
        model.add_row(f"count_{t}_lo", terms, ">=", tmpl.min_count, "room_count")
        if tmpl.max_count is not None:
            model.add_row(f"count_{t}_hi", terms, "<=", tmpl.max_count, "room_count")
            if tmpl.max_count == 0:
                for r in rs:
                    model.fix(r, 0)
    return model


def export_grid_map(
    mesh: Mesh,
    templates: list[RoomTemplate],
    rooms: list[RoomPlacement],
    selected,
    active_edges,
) -> str:
    """Plain-text grid map: a face-to-room table and an edge-state table."""
    coords = grid_addressing(mesh)
    room_of = {}
    for n, x in enumerate(sorted(selected)):
        for f in rooms[x].faces:
            room_of[f] = (n, templates[rooms[x].template].name)
    active = set(active_edges)
    lines = ["# meshnet grid map v1", "[faces]", "# face x y room template"]
    for f in range(mesh.n_faces):
        x, y = coords[f]
        if f in room_of:
            lines.append(f"{f} {x} {y} {room_of[f][0]} {room_of[f][1]}")
        else:
            lines.append(f"{f} {x} {y} - {'obstacle' if f in mesh.obstacle_faces else '-'}")
    lines += ["[edges]", "# edge u v active"]
    for e, (u, v) in enumerate(mesh.edges):
        lines.append(f"{e} {u} {v} {1 if e in active else 0}")
    return "\n".join(lines) + "\n"
