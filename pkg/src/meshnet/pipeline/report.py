"""Validation reports recomputed from emitted solution documents.

Nothing recorded by the solver is trusted: validity, coverage, feature
scans, distance values and the objective are all recomputed from the
document's mesh and active edge list.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from ..mesh import sample_partition_vertices
from ..model.network import resolve_sinks
from ..solver.oracles import (
    check_validity,
    evaluate_objective,
    feasibility_violations,
    half_edge_distances,
    scan_features,
    uncovered_vertices,
)
from ..solver.solution import load_solution
from ..spec import FEATURES, FunctionalSpec
from ..tiling import placement_edges


@dataclass
class ValidationReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "result", "detail"])
        for name, ok, detail in self.checks:
            w.writerow([name, "PASS" if ok else "FAIL", detail])
        w.writerow(["verdict", "PASS" if self.passed else "FAIL", ""])
        return buf.getvalue()


def validate_document(text: str, spec: FunctionalSpec, templates=None, tol: float = 1e-6) -> ValidationReport:
    mesh, sol, doc = load_solution(text)
    rep = ValidationReport()
    active = set(sol.active_edges)
    sinks = resolve_sinks(mesh, spec)

    islands = check_validity(mesh, active, sinks).islands
    rep.add("islands", not islands, f"{len(islands)} island(s)" if islands else "")
    if spec.mode == "network":
        missing = uncovered_vertices(mesh, active, spec.coverage_radius)
        rep.add("coverage", not missing, f"uncovered vertices {missing[:10]}" if missing else "")
    feats = scan_features(mesh, active, sinks, spec.patterns)
    for name in FEATURES:
        if spec.feature(name).forbidden:
            n = len(feats[name])
            rep.add(f"forbidden_{name}", n == 0, f"{n} occurrence(s)" if n else "")
    sampled = sample_partition_vertices(mesh, spec.partition_seed) if spec.point_to_point else None
    seen = {"island", "coverage", *FEATURES}
    other = [v for v in feasibility_violations(mesh, spec, active, sampled) if v not in seen]
    rep.add("constraints", not other, "; ".join(other))

    oriented = set(sol.orientation)
    rep.add("orientation", oriented == active, "" if oriented == active else "orientation does not match active edges")
    if not islands and oriented == active:
        dist = half_edge_distances(mesh, active, sinks)
        worst = 0.0
        for e in active:
            h = sol.orientation[e]
            best = min(dist[2 * e], dist[2 * e + 1])
            # the stored orientation must be a shortest one and carry its value
            worst = max(worst, dist[h] - best, abs(sol.distances[h] - best))
        rep.add("distance_values", worst <= tol, f"max deviation {worst:.3g}" if worst > tol else "")
        if sol.objective is not None:
            obj = evaluate_objective(mesh, spec, active).total
            ok = abs(obj - sol.objective) <= tol * max(1.0, abs(obj))
            rep.add("objective", ok, "" if ok else f"document {sol.objective!r} vs recomputed {obj!r}")

    if spec.mode in ("floorplan", "gamelevel"):
        _tiling_checks(rep, mesh, spec, doc, active, templates)
    return rep


def _tiling_checks(rep, mesh, spec, doc, active, templates):
    placements = doc.get("placements") or []
    count = [0] * mesh.n_faces
    for p in placements:
        for f in p.get("faces", ()):
            count[f] += 1
    bad = [f for f in range(mesh.n_faces) if count[f] != (0 if f in mesh.obstacle_faces else 1)]
    rep.add("tiling_cover", not bad, f"faces covered wrongly: {bad[:10]}" if bad else "")
    wrong = []
    for n, p in enumerate(placements):
        inner, boundary = placement_edges(mesh, p.get("faces", ()))
        on_inner = sum(1 for e in inner if e in active)
        on_bound = sum(1 for e in boundary if e in active)
        if spec.mode == "floorplan":
            if on_inner or not on_bound:
                wrong.append(n)
        elif not on_inner or on_bound:
            wrong.append(n)
    rep.add("room_edges", not wrong, f"placements with wrong edge roles: {wrong}" if wrong else "")
    if templates:
        used: dict[str, int] = {}
        for p in placements:
            used[p.get("template", "")] = used.get(p.get("template", ""), 0) + 1
        off = []
        for t in templates:
            k = used.get(t.name, 0)
            if k < t.min_count or (t.max_count is not None and k > t.max_count):
                off.append(f"{t.name}={k}")
        rep.add("room_counts", not off, ", ".join(off))
