"""Solution documents: the mesh document plus the selected network.

Extra sections after the mesh sections:

``status``, ``objective``, ``bound``, ``breakdown``
    solve outcome; ``breakdown`` maps objective terms to weighted values.
``active_edges``
    ``[u, v]`` rows of the network.
``orientation``
    ``[i, j, D]`` rows: the chosen half-edge ``i -> j`` of each active edge
    and its distance value.
``placements``
    ``{"index", "template", "faces"}`` rows for tiling modes.
``geometry``
    optional smoothed positions: ``{"vertices": [[id, x, y], ...],
    "snakes": [[v0, v1, ...], ...]}``.
"""

from __future__ import annotations

import json

from ..mesh import Mesh, MeshParseError, dump_document, mesh_from_dict, mesh_to_dict
from .bnb import NetworkSolution

FORMAT_NAME = "meshnet/solution"


def solution_to_dict(
    mesh: Mesh,
    solution: NetworkSolution,
    *,
    rooms=None,
    templates=None,
    extra: dict | None = None,
) -> dict:
    doc = mesh_to_dict(mesh)
    doc["format"] = FORMAT_NAME
    doc["status"] = solution.status
    doc["objective"] = solution.objective
    doc["bound"] = solution.bound
    doc["breakdown"] = {k: solution.breakdown[k] for k in sorted(solution.breakdown)}
    doc["active_edges"] = [list(mesh.edges[e]) for e in sorted(solution.active_edges)]
    rows = []
    for e in sorted(solution.orientation):
        h = solution.orientation[e]
        d = solution.distances[h] if solution.distances else 0.0
        rows.append([int(mesh.he_tail[h]), int(mesh.he_head[h]), float(d)])
    doc["orientation"] = rows
    placements = []
    for x in solution.placements:
        row = {"index": int(x)}
        if rooms is not None:
            row["faces"] = list(rooms[x].faces)
            if templates is not None:
                row["template"] = templates[rooms[x].template].name
        placements.append(row)
    doc["placements"] = placements
    if extra:
        doc.update(extra)
    return doc


def dump_solution(mesh: Mesh, solution: NetworkSolution, **kw) -> str:
    return dump_document(solution_to_dict(mesh, solution, **kw))


def load_solution(text: str) -> tuple[Mesh, NetworkSolution, dict]:
    """Parse a solution document into ``(mesh, solution, raw document)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshParseError(f"solution document is not valid JSON: {exc}") from exc
    mesh = mesh_from_dict(doc)
    if "active_edges" not in doc:
        raise MeshParseError("document has no active_edges section")
    active = tuple(sorted(mesh.edge_id(u, v) for u, v in doc["active_edges"]))
    orientation = {}
    distances = [0.0] * (2 * mesh.n_edges)
    for i, j, d in doc.get("orientation") or ():
        h = mesh.half_edge(int(i), int(j))
        orientation[h >> 1] = h
        distances[h] = float(d)
    sol = NetworkSolution(
        status=doc.get("status", "unknown"),
        objective=doc.get("objective"),
        bound=doc.get("bound"),
        breakdown=dict(doc.get("breakdown") or {}),
        active_edges=active,
        orientation=orientation,
        distances=tuple(distances),
        placements=tuple(int(p["index"]) for p in doc.get("placements") or ()),
    )
    return mesh, sol, doc
