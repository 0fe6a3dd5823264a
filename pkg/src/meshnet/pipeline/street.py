"""Multi-level street generation: solve coarse to fine, then smooth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mesh import Mesh, catmull_clark_subdivide
from ..smoothing import Snake, StepPolicy, closed_anchor_keys, extract_snakes, smooth_with_history, snap_right_angles
from ..solver.bnb import SolveOptions
from ..solver.oracles import active_vertices
from .plan import LevelPlan
from .scenario import PipelineError, ScenarioResult, run_scenario


@dataclass
class LevelResult:
    index: int
    name: str
    result: ScenarioResult
    # level that first activated each active edge of this level's mesh
    edge_level: dict[int, int]

    @property
    def mesh(self) -> Mesh:
        return self.result.mesh

    @property
    def solution(self):
        return self.result.solution


@dataclass
class StreetResult:
    levels: list[LevelResult]
    positions: np.ndarray | None = None  # smoothed positions on the last mesh
    snakes: list[dict] = field(default_factory=list)
    energies: list[list[float]] = field(default_factory=list)

    def geometry(self) -> dict:
        """Geometry section for the final solution document."""
        if self.positions is None:
            return {}
        mesh = self.levels[-1].mesh
        moved = [
            [v, float(x), float(y)]
            for v, (x, y) in enumerate(self.positions)
            if (x, y) != tuple(mesh.positions[v])
        ]
        return {"geometry": {"vertices": moved, "snakes": self.snakes}}


def _subdivided_positions(parent: Mesh, pos: np.ndarray, midpoints: dict[int, np.ndarray]) -> np.ndarray:
    """Child positions after subdivision, following moved parent vertices."""
    V, E = parent.n_vertices, parent.n_edges
    out = np.zeros((V + E + parent.n_faces, 2))
    out[:V] = pos
    for e, (u, v) in enumerate(parent.edges):
        out[V + e] = midpoints.get(e, 0.5 * (pos[u] + pos[v]))
    for f, face in enumerate(parent.faces):
        out[V + E + f] = pos[list(face)].mean(axis=0)
    return out


def run_street_pipeline(
    mesh: Mesh,
    plan: LevelPlan,
    options: SolveOptions | None = None,
    solver: str = "builtin",
    policy: StepPolicy | None = None,
) -> StreetResult:
    """Solve every level of ``plan``, fixing each level's network in the next one."""
    options = options or SolveOptions()
    levels: list[LevelResult] = []
    cur = mesh
    parent_active: set[int] = set()
    parent_level: dict[int, int] = {}
    for i, lv in enumerate(plan.levels):
        if lv.subdivide:
            child = catmull_clark_subdivide(cur)
            inherited = {}
            for e, p in enumerate(child.edge_parent):
                if p in parent_active:
                    inherited[e] = parent_level[p]
            cur = child
        else:
            inherited = {e: parent_level[e] for e in parent_active}
        spec = lv.spec
        if inherited:
            cur = cur.replace(fixed_active=frozenset(cur.fixed_active) | frozenset(inherited))
        if lv.sinks == "inherit":
            cur = cur.replace(sinks=frozenset(active_vertices(cur, inherited)))
            spec = spec.replace(sinks="mesh")
        result = run_scenario(cur, spec, None, options, solver, stage=f"level {i} ({lv.name})")
        if result.solution is None:
            levels.append(LevelResult(i, lv.name, result, dict(inherited)))
            return StreetResult(levels)
        active = set(result.solution.active_edges)
        missing = set(inherited) - active
        if missing:
            raise PipelineError(f"level {i} ({lv.name})", "parent network edges were dropped")
        edge_level = {e: inherited.get(e, i) for e in active}
        levels.append(LevelResult(i, lv.name, result, edge_level))
        parent_active, parent_level = active, edge_level
    out = StreetResult(levels)
    if plan.smooth:
        _smooth_levels(out, plan, policy)
    return out


def _smooth_levels(out: StreetResult, plan: LevelPlan, policy: StepPolicy | None):
    pos = None
    prev_mesh = None
    midpoints: dict[int, np.ndarray] = {}
    snakes_out = []
    for group in plan.groups:
        last = out.levels[group[-1]]
        mesh = last.mesh
        # carry smoothed positions down to this group's mesh
        if pos is None:
            pos = mesh.positions.copy()
        else:
            walk = prev_mesh
            chain = []
            for k in range(group[0], group[-1] + 1):
                if plan.levels[k].subdivide:
                    chain.append(k)
            meshes = [lvl.mesh for lvl in out.levels]
            for k in chain:
                parent = meshes[k - 1]
                pos = _subdivided_positions(parent, pos, midpoints if parent is walk else {})
            assert len(pos) == mesh.n_vertices
        net = last.edge_level
        earlier = {e for e, lvl in net.items() if lvl < group[0]}
        pinned = set()
        for e in earlier:
            pinned.update(mesh.edges[e])
        snakes, tags = [], []
        for k in group:
            edges = sorted(e for e, lvl in net.items() if lvl == k)
            if not edges:
                continue
            for s in extract_snakes(mesh, edges, plan.weights(k), plan.subdivisions, pos):
                keys = tuple(x if isinstance(x, int) else ("s", k) + x[1:] for x in s.keys)
                snakes.append(Snake(s.points, s.original, s.closed, s.alpha, s.beta, s.gamma, keys))
                tags.append(k)
        if not snakes:
            prev_mesh = mesh
            continue
        pinned |= closed_anchor_keys(snakes)
        res = smooth_with_history(snakes, policy, pinned)
        smoothed = res.snakes
        if plan.snap:
            junctions = [v for v in range(mesh.n_vertices) if _degree(mesh, net, v) >= 3]
            smoothed = snap_right_angles(smoothed, junctions, plan.snap_threshold)
        out.energies.append(res.energies)
        midpoints = {}
        step = 2**plan.subdivisions
        for s, k in zip(smoothed, tags):
            n = s.n
            for idx, key in enumerate(s.keys):
                if isinstance(key, int):
                    pos[key] = s.points[idx]
            if plan.subdivisions >= 1:
                half = step // 2
                ctrl = [(idx, key) for idx, key in enumerate(s.keys) if isinstance(key, int)]
                for a in range(len(ctrl)):
                    ia, va = ctrl[a]
                    if a + 1 < len(ctrl):
                        vb = ctrl[a + 1][1]
                    elif s.closed:
                        vb = ctrl[0][1]
                    else:
                        continue
                    midpoints[mesh.edge_id(va, vb)] = s.points[(ia + half) % n].copy()
            snakes_out.append(
                {"level": k, "closed": s.closed, "points": [[float(x), float(y)] for x, y in s.points]}
            )
        prev_mesh = mesh
    out.positions = pos
    out.snakes = snakes_out


def _degree(mesh: Mesh, net: dict[int, int], v: int) -> int:
    return sum(1 for e in mesh.vertex_edges[v] if e in net)
