"""Shared fixtures and independent oracles for the test-suite."""

from __future__ import annotations

import math
import os
from itertools import product

from meshnet.mesh import Mesh, grid_mesh, mesh_from_dict
from meshnet.model.network import available_edges, edge_states, resolve_sinks
from meshnet.solver.oracles import half_edge_distances, scan_features
from meshnet.spec import FunctionalSpec, spec_from_dict
from meshnet.tiling import rectangle

LAMBDAS = ((1, 0), (0, 1), (1, 1), (5, 1))


# -- meshes -------------------------------------------------------------------


def inset_mesh() -> Mesh:
    """Small mixed mesh whose network 0-1, 1-3, 1-4, 3-4, 4-5 has D = 2, 0, 2, 1 on
    0->1, 1->2, 1->3, 1->4 (the sink is vertex 5)."""
    s = math.sqrt(3) / 2
    return mesh_from_dict(
        {
            "vertices": [
                [0, 0, -1], [1, 0, 0], [2, -1, 0], [3, s, 0.5], [4, 0, 1],
                [5, 0, 2], [6, -1, 1], [7, -1, 2], [8, -1, -1],
            ],
            "faces": [[8, 0, 1, 2], [2, 1, 4, 6], [1, 3, 4], [6, 4, 5, 7]],
            "sinks": [5],
        }
    )


INSET_ACTIVE = ((0, 1), (1, 3), (1, 4), (3, 4), (4, 5))
INSET_EXPECTED = {(0, 1): 2.0, (1, 2): 0.0, (1, 3): 2.0, (1, 4): 1.0}


def l_mesh() -> Mesh:
    # three unit squares in an L
    return mesh_from_dict(
        {
            "vertices": [[0, 0, 0], [1, 1, 0], [2, 2, 0], [3, 0, 1], [4, 1, 1], [5, 2, 1], [6, 0, 2], [7, 1, 2]],
            "faces": [[0, 1, 4, 3], [1, 2, 5, 4], [3, 4, 7, 6]],
            "sinks": [0],
        }
    )


def hex_fan() -> Mesh:
    # hexagon split into six triangles around a centre
    pts = [[0, 0.0, 0.0]] + [[k + 1, math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)] for k in range(6)]
    faces = [[0, k + 1, (k + 1) % 6 + 1] for k in range(6)]
    return mesh_from_dict({"vertices": pts, "faces": faces, "sinks": [1]})


def small_instances() -> list[tuple[str, Mesh, FunctionalSpec]]:
    """Desk-scale instances with at most 16 candidate edges."""
    keep = {"exclude_boundary_edges": False}
    out = [
        ("grid2x2_corner", grid_mesh(2, 2, sinks=[0]), spec_from_dict({**keep, "coverage_radius": 1})),
        ("grid2x2_interior", grid_mesh(2, 2), spec_from_dict({"sinks": "boundary", "coverage_radius": 1})),
        ("grid3x1", grid_mesh(3, 1, sinks=[0]), spec_from_dict({**keep, "coverage_radius": 1})),
        (
            "grid5x1_mid",
            grid_mesh(5, 1, sinks=[2]),
            spec_from_dict({**keep, "coverage_radius": 1, "features": {"dead_end": "forbidden"}}),
        ),
        ("grid3x2_interior", grid_mesh(3, 2), spec_from_dict({"sinks": "boundary", "coverage_radius": 1})),
        ("grid4x2_interior", grid_mesh(4, 2), spec_from_dict({"sinks": "boundary", "coverage_radius": 1})),
        ("grid3x3_interior_r1", grid_mesh(3, 3), spec_from_dict({"sinks": "boundary", "coverage_radius": 1})),
        (
            "grid3x3_interior_r0",
            grid_mesh(3, 3),
            spec_from_dict({"sinks": "boundary", "coverage_radius": 0, "features": {"dead_end": "forbidden"}}),
        ),
        ("inset", inset_mesh(), spec_from_dict({**keep, "coverage_radius": 1})),
        (
            "grid2x2_blocked",
            grid_mesh(2, 2, sinks=[1], obstacle_vertices=[8], fixed_inactive=[(3, 4)]),
            spec_from_dict({**keep, "coverage_radius": 1, "features": {"dead_end": "forbidden"}}),
        ),
        (
            "grid4x1_two_sinks",
            grid_mesh(4, 1, sinks=[0, 9]),
            spec_from_dict({**keep, "coverage_radius": 1, "features": {"dead_end": "forbidden"}}),
        ),
        ("l_shape", l_mesh(), spec_from_dict({**keep, "coverage_radius": 1, "features": {"branch": {"penalized": 2}}})),
        ("hex_fan", hex_fan(), spec_from_dict({**keep, "coverage_radius": 1, "features": {"dead_end": "forbidden"}})),
    ]
    return out


# -- tiling fixtures ----------------------------------------------------------


def floorplan_fixture():
    mesh = grid_mesh(4, 4, sinks=[12])
    spec = spec_from_dict({"mode": "floorplan", "coverage_radius": 1})
    return mesh, spec, [rectangle("room", 2, 2)]


def game_fixture(branch="allowed", sinks=(6,), dead_end="allowed"):
    mesh = grid_mesh(4, 4, sinks=list(sinks))
    spec = spec_from_dict({"mode": "gamelevel", "features": {"branch": branch, "dead_end": dead_end}})
    templates = [
        rectangle("boss", 2, 2, min_count=1, max_count=1),
        rectangle("room", 2, 2),
        rectangle("hall", 2, 1),
    ]
    return mesh, spec, templates


# -- street fixture -----------------------------------------------------------

STREET_PLAN = """
levels:
  - name: arterial
    spec: {coverage_radius: 2, sinks: [5], features: {dead_end: forbidden}}
  - name: collector
    subdivide: true
    sinks: inherit
    spec: {coverage_radius: 2, features: {dead_end: forbidden}}
  - name: local
    sinks: inherit
    spec: {coverage_radius: 1}
"""


def street_mesh() -> Mesh:
    return grid_mesh(3, 3)


# -- independent oracles ------------------------------------------------------


def hop_ball(mesh: Mesh, v: int, radius: int) -> set[int]:
    seen = {v}
    frontier = [v]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for u, w in mesh.edges:
                for a, b in ((u, w), (w, u)):
                    if a == x and b not in seen:
                        seen.add(b)
                        nxt.append(b)
        frontier = nxt
    return seen


def components(mesh: Mesh, edges) -> list[set[int]]:
    """Vertex sets of the connected components of an edge set (union-find)."""
    parent: dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        u, v = mesh.edges[e]
        parent[find(u)] = find(v)
    groups: dict[int, set[int]] = {}
    for x in list(parent):
        groups.setdefault(find(x), set()).add(x)
    return list(groups.values())


def island_free(mesh: Mesh, edges, sinks) -> bool:
    return all(c & set(sinks) for c in components(mesh, edges))


def relaxation_distances(mesh: Mesh, edges, sinks) -> list[float]:
    """Per half-edge distance by Bellman-Ford style relaxation to a fixpoint."""
    active = set(edges)
    sinks = set(sinks)
    hs = [h for h in range(2 * mesh.n_edges) if h >> 1 in active]
    d = {h: (0.0 if int(mesh.he_head[h]) in sinks else math.inf) for h in hs}
    changed = True
    while changed:
        changed = False
        for h in hs:
            i, j = int(mesh.he_tail[h]), int(mesh.he_head[h])
            if j in sinks:
                continue
            best = d[h]
            for s in hs:
                if int(mesh.he_tail[s]) == j and int(mesh.he_head[s]) != i:
                    cand = d[s] + float(mesh.lengths[h >> 1])
                    if cand < best - 1e-15:
                        best = cand
            if best < d[h]:
                d[h] = best
                changed = True
    out = [math.inf] * (2 * mesh.n_edges)
    for h, v in d.items():
        out[h] = v
    return out


def brute_force(mesh: Mesh, spec: FunctionalSpec, lambdas=LAMBDAS):
    """Exhaustive optimum per weight pair: ``{(lL, lD): (value, edge set)}``."""
    on, off = edge_states(mesh, spec)
    avail = available_edges(mesh, spec)
    free = sorted(avail - on)
    sinks = resolve_sinks(mesh, spec)
    obstacles = mesh.obstacle_vertices
    cover = []
    if spec.mode == "network":
        for v in range(mesh.n_vertices):
            if v in obstacles:
                continue
            ball = hop_ball(mesh, v, spec.coverage_radius) - obstacles
            mask = 0
            for e, (a, b) in enumerate(mesh.edges):
                if a in ball or b in ball:
                    mask |= 1 << e
            cover.append(mask)
    base = 0
    for e in on:
        base |= 1 << e
    feasible = []
    for bits in product((0, 1), repeat=len(free)):
        mask = base
        for e, b in zip(free, bits):
            if b:
                mask |= 1 << e
        if any(not (mask & c) for c in cover):
            continue
        edges = [e for e in range(mesh.n_edges) if mask >> e & 1]
        if not island_free(mesh, edges, sinks):
            continue
        touched = {v for e in edges for v in mesh.edges[e]}
        if set(spec.vertices_active) - touched:
            continue
        feats = scan_features(mesh, edges, sinks, spec.patterns)
        if any(spec.feature(n).forbidden and feats[n] for n in feats):
            continue
        penalty = sum(spec.feature(n).weight * len(feats[n]) for n in feats if spec.feature(n).penalized)
        dist = half_edge_distances(mesh, edges, sinks)
        total_d = sum(min(dist[2 * e], dist[2 * e + 1]) for e in edges)
        length = sum(float(mesh.lengths[e]) for e in edges)
        feasible.append((length, total_d, penalty, frozenset(edges)))
    out = {}
    for lam in lambdas:
        best = None
        for length, total_d, pen, edges in feasible:
            val = lam[0] * length + lam[1] * total_d + pen
            if best is None or val < best[0] - 1e-12:
                best = (val, edges)
        out[lam] = best
    return out


def encoding_feasible(mesh: Mesh, edges, sinks) -> bool:
    """Whether some half-edge choice for ``edges`` satisfies the successor rows.

    A choice H works iff every half-edge in H starts a successor chain inside
    H that ends on a half-edge into a sink. Reachability only grows with H,
    so the best candidate is H = every half-edge that reaches a sink when
    all half-edges are switched on; the edge set is feasible iff each of its
    edges keeps at least one half in that set.
    """
    dist = relaxation_distances(mesh, edges, sinks)
    return all(min(dist[2 * e], dist[2 * e + 1]) < math.inf for e in edges)


def witness_values(model, mesh: Mesh, edges, sinks) -> list[float]:
    """Full assignment of a validity model extending ``edges``.

    Both halves of an edge are switched on when both reach a sink; each
    active half certifies itself with one successor on a shortest chain.
    """
    meta = model.meta
    values = [0.0] * model.n_vars
    active = set(edges)
    dist = relaxation_distances(mesh, active, sinks)
    for e in active:
        values[meta["edge"][e]] = 1.0
    for h in range(2 * mesh.n_edges):
        if h >> 1 in active and dist[h] < math.inf:
            values[meta["half_edge"][h]] = 1.0
            values[meta["distance"][h]] = dist[h]
    chosen = {}
    for (h, s), lv in sorted(meta["succ"].items()):
        if h in chosen or values[meta["half_edge"][h]] == 0 or values[meta["half_edge"][s]] == 0:
            continue
        if abs(dist[s] + float(mesh.lengths[h >> 1]) - dist[h]) <= 1e-9:
            chosen[h] = s
            values[lv] = 1.0
    for y, vv in enumerate(meta["vertex"]):
        values[vv] = float(any(e in active for e in mesh.vertex_edges[y]))
    return values


def turning_angles(points) -> list[float]:
    out = []
    for a, b, c in zip(points, points[1:], points[2:]):
        u = (b[0] - a[0], b[1] - a[1])
        v = (c[0] - b[0], c[1] - b[1])
        cross = u[0] * v[1] - u[1] * v[0]
        dot = u[0] * v[0] + u[1] * v[1]
        out.append(abs(math.degrees(math.atan2(cross, dot))))
    return out


# -- LP corpus ----------------------------------------------------------------

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "corpus")


def corpus_models():
    """``(name, model)`` for every fixture instance, in a fixed order."""
    from meshnet.model import build_model

    out = [(name, build_model(mesh, spec)) for name, mesh, spec in small_instances()]
    mesh, spec, templates = floorplan_fixture()
    out.append(("floorplan", build_model(mesh, spec, templates)))
    mesh, spec, templates = game_fixture(branch="forbidden", dead_end="forbidden")
    out.append(("game_circular", build_model(mesh, spec, templates)))
    mesh = grid_mesh(3, 2, sinks=[0], partition={"a": [0, 3], "b": [1, 4], "c": [2, 5]})
    spec = spec_from_dict(
        {
            "point_to_point": True,
            "exclude_boundary_edges": False,
            "weights": {"length": 1, "distance": 0.0001},
            "features": {"zigzag": 5, "proximity": "inf", "t_junction": {"penalized": 1}, "dead_end": 2},
            "forced_routes": [[3, 11]],
        }
    )
    out.append(("features", build_model(mesh, spec)))
    return out


def write_corpus(directory: str = CORPUS_DIR):
    from meshnet.solver.lp import export_lp

    os.makedirs(directory, exist_ok=True)
    for name, model in corpus_models():
        with open(os.path.join(directory, f"{name}.lp"), "w") as fh:
            fh.write(export_lp(model))


if __name__ == "__main__":
    write_corpus()
