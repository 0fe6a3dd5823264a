"""Semantic oracles that work on edge sets directly, independent of the IP encoding.

These are used for post-processing (distance values when the objective does
not drive them), for validation reports, by the stochastic baseline, and as
test oracles for the built-in solver.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable

from ..mesh import Mesh, coverage_neighborhood, sample_partition_vertices
from ..model.network import candidate_paths, edge_states, forced_route_paths, resolve_sinks
from ..model.patterns import enumerate_patterns
from ..spec import FunctionalSpec


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class ValidityReport:
    """Connected components of the active edge set that contain no sink."""

    islands: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    @property
    def valid(self) -> bool:
        return not self.islands


def active_components(mesh: Mesh, active_edges: Iterable[int]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """``(vertices, edges)`` of each connected component of the active edges, sorted."""
    active = set(active_edges)
    adj: dict[int, list[int]] = {}
    for e in active:
        u, v = mesh.edges[e]
        adj.setdefault(u, []).append(e)
        adj.setdefault(v, []).append(e)
    seen = set()
    out = []
    for start in sorted(adj):
        if start in seen:
            continue
        verts, edges = {start}, set()
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for e in adj[v]:
                edges.add(e)
                w = mesh.other_end(e, v)
                if w not in seen:
                    seen.add(w)
                    verts.add(w)
                    stack.append(w)
        out.append((tuple(sorted(verts)), tuple(sorted(edges))))
    return out


def check_validity(mesh: Mesh, active_edges: Iterable[int], sinks: Iterable[int]) -> ValidityReport:
    sinks = set(sinks)
    islands = [c for c in active_components(mesh, active_edges) if not sinks.intersection(c[0])]
    return ValidityReport(tuple(islands))


def half_edge_distances(mesh: Mesh, edges: Iterable[int], sinks: Iterable[int]) -> list[float]:
    """Shortest successor-walk length to a sink for both half-edges of each given edge.

    Half-edges of edges not in ``edges`` get ``inf``; so do half-edges from
    which no sink is reachable without an immediate U-turn.
    """
    sinks = set(sinks)
    on = set(edges)
    n = 2 * mesh.n_edges
    dist = [math.inf] * n
    heap = []
    for e in sorted(on):
        for h in (2 * e, 2 * e + 1):
            if int(mesh.he_head[h]) in sinks:
                dist[h] = 0.0
                heap.append((0.0, h))
    heapq.heapify(heap)
    done = [False] * n
    while heap:
        d, s = heapq.heappop(heap)
        if done[s]:
            continue
        done[s] = True
        # predecessors p = (k -> i) of s = (i -> j), with k != j
        i, j = int(mesh.he_tail[s]), int(mesh.he_head[s])
        for e in mesh.vertex_edges[i]:
            if e not in on:
                continue
            k = mesh.other_end(e, i)
            if k == j:
                continue
            p = 2 * e + (0 if k < i else 1)
            if int(mesh.he_head[p]) in sinks:
                continue
            nd = d + float(mesh.lengths[e])
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, p))
    return dist


@dataclass(frozen=True)
class DistanceValues:
    orientation: dict[int, int]  # active edge -> chosen half-edge
    values: tuple[float, ...]  # per half-edge; 0 off the chosen orientation

    @property
    def total(self) -> float:
        return float(sum(self.values))


def compute_distance_values(mesh: Mesh, active_edges: Iterable[int], sinks: Iterable[int]) -> DistanceValues:
    """Minimal distance values for a valid edge set.

    Each active edge is oriented along its half-edge with the smaller
    distance (the ``u -> v`` half-edge on ties); every other half-edge gets 0.
    """
    active = sorted(set(active_edges))
    sinks = set(sinks)
    report = check_validity(mesh, active, sinks)
    if not report.valid:
        raise OracleError(f"edge set has {len(report.islands)} island(s); distance values are undefined")
    dist = half_edge_distances(mesh, active, sinks)
    values = [0.0] * (2 * mesh.n_edges)
    orientation = {}
    for e in active:
        h = 2 * e if dist[2 * e] <= dist[2 * e + 1] else 2 * e + 1
        if math.isinf(dist[h]):
            raise OracleError(f"edge {mesh.edges[e]} reaches no sink")
        orientation[e] = h
        values[h] = dist[h]
    return DistanceValues(orientation, tuple(values))


def active_vertices(mesh: Mesh, active_edges: Iterable[int]) -> set[int]:
    return {v for e in active_edges for v in mesh.edges[e]}


def uncovered_vertices(mesh: Mesh, active_edges: Iterable[int], radius: int) -> list[int]:
    """Non-obstacle vertices with no active vertex within ``radius`` hops."""
    act = active_vertices(mesh, active_edges) - mesh.obstacle_vertices
    out = []
    for v in range(mesh.n_vertices):
        if v in mesh.obstacle_vertices:
            continue
        if not act.intersection(coverage_neighborhood(mesh, v, radius)):
            out.append(v)
    return out


def scan_features(mesh: Mesh, active_edges: Iterable[int], sinks: Iterable[int], patterns=None) -> dict[str, list]:
    """Occurrences of each local feature in an edge set.

    * ``dead_end`` -- half-edges ``i -> j`` on an active edge where ``j`` is
      not a sink and no other edge at ``j`` is active.
    * ``branch`` -- vertices with three or more active edges.
    * ``zigzag`` / ``proximity`` -- pattern edge sets fully active.
    * ``t_junction`` -- half-edges into a valence-4 vertex whose edge is
      inactive while the other three are active.
    """
    active = set(active_edges)
    sinks = set(sinks)
    deg = [0] * mesh.n_vertices
    for e in active:
        u, v = mesh.edges[e]
        deg[u] += 1
        deg[v] += 1
    out: dict[str, list] = {"dead_end": [], "branch": [], "zigzag": [], "proximity": [], "t_junction": []}
    for h in range(2 * mesh.n_edges):
        j = int(mesh.he_head[h])
        e = h >> 1
        if e in active and j not in sinks and deg[j] == 1:
            out["dead_end"].append(h)
        if mesh.degree(j) == 4 and e not in active and deg[j] == 3:
            out["t_junction"].append(h)
    out["branch"] = [v for v in range(mesh.n_vertices) if deg[v] >= 3]
    if patterns is None:
        from ..spec import DEFAULT_PATTERNS

        patterns = DEFAULT_PATTERNS
    for kind in ("zigzag", "proximity"):
        for h, w, edges in enumerate_patterns(mesh, patterns.get(kind, ())):
            if all(e in active for e in edges):
                out[kind].append(edges)
    return out


def feasibility_violations(
    mesh: Mesh, spec: FunctionalSpec, active_edges: Iterable[int], sampled: dict[str, int] | None = None
) -> list[str]:
    """Why an edge set is not a feasible network for ``spec`` (empty when it is).

    Checks fixings, validity, coverage, forbidden features, forced-route
    branching and point-to-point connections. Tiling rows are not covered.
    """
    active = set(active_edges)
    out = []
    forced_on, forced_off = edge_states(mesh, spec)
    if forced_on - active:
        out.append("fixed-active edge missing")
    if forced_off & active:
        out.append("fixed-inactive edge used")
    sinks = resolve_sinks(mesh, spec)
    if not check_validity(mesh, active, sinks).valid:
        out.append("island")
    if spec.mode == "network" and uncovered_vertices(mesh, active, spec.coverage_radius):
        out.append("coverage")
    verts = active_vertices(mesh, active)
    if set(spec.vertices_active) - verts:
        out.append("fixed-active vertex unused")
    feats = scan_features(mesh, active, sinks, spec.patterns)
    for name in feats:
        if spec.feature(name).forbidden and feats[name]:
            out.append(name)
    for edges, verts_ in forced_route_paths(mesh, spec):
        for y in verts_[1:-1]:
            if sum(1 for e in mesh.vertex_edges[y] if e in active) > 2:
                out.append("route branch")
                break
    if spec.point_to_point:
        if sampled is None:
            sampled = sample_partition_vertices(mesh, spec.partition_seed)
        for _, _, _, paths in candidate_paths(mesh, spec, sampled):
            if not any(all(e in active for e in p.edges) for p in paths):
                out.append("point-to-point")
                break
    return out


def is_feasible(mesh: Mesh, spec: FunctionalSpec, active_edges: Iterable[int], sampled=None) -> bool:
    return not feasibility_violations(mesh, spec, active_edges, sampled)


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    breakdown: dict[str, float] = field(default_factory=dict)


def evaluate_objective(mesh: Mesh, spec: FunctionalSpec, active_edges: Iterable[int]) -> ObjectiveValue:
    """Objective of an edge set with optimal distance values and minimal penalty indicators."""
    active = sorted(set(active_edges))
    sinks = resolve_sinks(mesh, spec)
    length = sum(float(mesh.lengths[e]) for e in active)
    breakdown = {"length": spec.length_weight * length}
    if spec.distance_weight:
        breakdown["distance"] = spec.distance_weight * compute_distance_values(mesh, active, sinks).total
    else:
        breakdown["distance"] = 0.0
    feats = scan_features(mesh, active, sinks, spec.patterns)
    for name, found in feats.items():
        policy = spec.feature(name)
        if policy.penalized:
            breakdown[name] = policy.weight * len(found)
    total = 0.0
    for v in breakdown.values():
        total += v
    return ObjectiveValue(total, breakdown)
