"""Depth-first branch-and-bound specialised to mesh network models.

Only the *primary* 0-1 variables (edge indicators, room indicators) are
branched on. Every other variable is a function of them: half-edge
orientations and distance values come from the distance oracle, the
remaining indicators from ``model.meta["defs"]``. A complete primary
assignment therefore determines the cheapest completion, which is checked
against every row of the model before it is accepted as an incumbent.

Pruning uses
* linear rows projected onto the primaries (unit propagation on 0-1 rows),
* reachability of a sink over active-or-free edges (an edge that cannot
  reach a sink is fixed off; a fixed-on edge that cannot reach one closes
  the node),
* at-least-one-path groups of the point-to-point rows,
* an objective bound from fixed-on edges, optimistic distance values and
  penalty indicators already forced on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

from ..model.ipmodel import BINARY, CONTINUOUS, IpModel, ModelError
from .oracles import compute_distance_values, half_edge_distances

EPS = 1e-9

OPTIMAL = "optimal"
FEASIBLE = "feasible-incumbent"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout-no-incumbent"

# nodes per second of time limit when the clock is not consulted
NODES_PER_SECOND = 2000


@dataclass
class SolveOptions:
    time_limit: float = 60.0
    deterministic: bool = True
    seed: int = 0
    gap: float = 0.0
    node_limit: int | None = None
    on_incumbent: Callable | None = None
    threads: int = 1

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")
        if self.gap < 0:
            raise ValueError("gap tolerance must be nonnegative")
        if self.threads < 1:
            raise ValueError("thread count must be at least 1")

    def budget(self) -> int | None:
        if self.node_limit is not None:
            return self.node_limit
        if self.deterministic:
            return max(1, int(self.time_limit * NODES_PER_SECOND))
        return None


@dataclass
class NetworkSolution:
    status: str
    objective: float | None = None
    bound: float | None = None
    breakdown: dict[str, float] = field(default_factory=dict)
    active_edges: tuple[int, ...] = ()
    orientation: dict[int, int] = field(default_factory=dict)
    distances: tuple[float, ...] = ()
    placements: tuple[int, ...] = ()
    values: tuple[float, ...] | None = None
    nodes: int = 0
    wall_time: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)

    @property
    def gap(self) -> float | None:
        if self.objective is None or self.bound is None:
            return None
        return max(0.0, self.objective - self.bound) / max(1.0, abs(self.objective))


def complete_assignment(model: IpModel, primary_values: dict[int, int]) -> list[float] | None:
    """Cheapest full assignment for fixed primaries; ``None`` when the edges hold an island."""
    meta = model.meta
    values = [0.0] * model.n_vars
    for v, x in primary_values.items():
        values[v] = float(x)
    if "half_edge" in meta:
        mesh = model.mesh
        E = meta["edge"]
        active = [e for e, ev in enumerate(E) if values[ev] > 0.5]
        try:
            dv = compute_distance_values(mesh, active, meta["sinks"])
        except ValueError:
            return None
        H, D = meta["half_edge"], meta["distance"]
        for e, h in dv.orientation.items():
            values[H[h]] = 1.0
        for h, d in enumerate(dv.values):
            values[D[h]] = d
        for (h, s), lv in meta["succ"].items():
            if values[H[h]] and values[H[s]] and dv.values[s] + mesh.he_length(h) <= dv.values[h] + EPS:
                values[lv] = 1.0
    for v, d in meta.get("defs", {}).items():
        values[v] = float(_eval_def(d, values))
    return values


def _eval_def(d, values) -> int:
    kind = d[0]
    if kind == "or":
        return int(any(values[m] > 0.5 for m in d[1]))
    if kind == "and":
        return int(all(values[m] > 0.5 for m in d[1]) and not any(values[m] > 0.5 for m in d[2]))
    if kind == "atleast":
        return int(sum(1 for m in d[1] if values[m] > 0.5) >= d[2])
    raise ModelError(f"unknown indicator definition {kind!r}")


def breakdown_of(model: IpModel, values) -> dict[str, float]:
    terms = model.meta.get("terms", {})
    out = {}
    for name, vs in terms.items():
        total = 0.0
        for v in vs:
            c = model.objective.get(v)
            if c:
                total += c * values[v]
        out[name] = total
    return out


class _Search:
    def __init__(self, model: IpModel, options: SolveOptions):
        self.model = model
        self.options = options
        meta = model.meta
        n = model.n_vars
        primary = meta.get("primary")
        if primary is None:
            if any(v.kind == CONTINUOUS for v in model.variables):
                raise ModelError("model has continuous variables but no structure metadata")
            primary = list(range(n))
        self.primary = list(primary)
        self.is_primary = [False] * n
        for v in self.primary:
            if model.variables[v].kind != BINARY:
                raise ModelError(f"primary variable {model.variables[v].name} is not binary")
            self.is_primary[v] = True
        self.defs = dict(meta.get("defs", {}))
        derived_ok = set(self.defs)
        if "half_edge" in meta:
            derived_ok.update(meta["half_edge"], meta["distance"], meta["succ"].values())
        for v in range(n):
            if not self.is_primary[v] and v not in derived_ok:
                raise ModelError(f"variable {model.variables[v].name} is neither primary nor derived")
        self.val = [-1] * n
        self.trail: list[int] = []
        self._build_rows()
        self._build_structure()

    # -- setup -----------------------------------------------------------

    def _build_rows(self):
        """Project each row onto the primaries as ``sum a x <= b`` rows."""
        model = self.model
        rows = []
        for c in model.constraints:
            senses = ["<=", ">="] if c.sense == "=" else [c.sense]
            for sense in senses:
                sign = 1.0 if sense == "<=" else -1.0
                proj: dict[int, float] = {}
                rhs = sign * c.rhs
                for v, a in c.terms:
                    a = sign * a
                    if self.is_primary[v]:
                        proj[v] = proj.get(v, 0.0) + a
                        continue
                    d = self.defs.get(v)
                    if d is not None and d[0] == "or" and a < 0 and all(self.is_primary[m] for m in d[1]):
                        # y <= sum(members), so a*y >= a*sum(members)
                        for m in d[1]:
                            proj[m] = proj.get(m, 0.0) + a
                        continue
                    var = model.variables[v]
                    rhs -= a * var.lo if a > 0 else a * var.hi
                terms = [(v, a) for v, a in proj.items() if abs(a) > EPS]
                if not terms:
                    if rhs < -EPS:
                        rows.append(([], rhs))
                    continue
                if sum(max(0.0, a) for _, a in terms) <= rhs + EPS:
                    continue
                rows.append((terms, rhs))
        for v, d in self.defs.items():
            var = model.variables[v]
            if d[0] == "or" and all(self.is_primary[m] for m in d[1]):
                if var.lo > 0.5:
                    rows.append(([(m, -1.0) for m in d[1]], -1.0))
                if var.hi < 0.5:
                    rows.append(([(m, 1.0) for m in d[1]], 0.0))
        self.rows = rows
        self.row_min = [sum(min(0.0, a) for _, a in terms) for terms, _ in rows]
        self.var_rows: list[list[tuple[int, float]]] = [[] for _ in range(model.n_vars)]
        for r, (terms, _) in enumerate(rows):
            for v, a in terms:
                self.var_rows[v].append((r, a))

    def _build_structure(self):
        meta = self.model.meta
        mesh = self.model.mesh
        self.validity = "half_edge" in meta
        self.edge_vars = list(meta.get("edge", ()))
        self.sinks = meta.get("sinks", ())
        self.p2p = [[list(p) for p in g["paths"]] for g in meta.get("p2p", ())]
        self.rooms_by_face: list[list[int]] = []
        if meta.get("rooms"):
            by_face: dict[int, list[int]] = {}
            for p in meta["rooms"]:
                for f in p.faces:
                    by_face.setdefault(f, []).append(p.var)
            self.rooms_by_face = [sorted(by_face[f]) for f in sorted(by_face)]
        # coverage sets as vertex sets, and for each edge the sets it can satisfy
        self.cover_sets = [set(s) for _, s in sorted(meta.get("cover_sets", {}).items())]
        self.edge_covers: list[list[int]] = []
        if self.cover_sets and mesh is not None:
            at_vertex: dict[int, list[int]] = {}
            for k, s in enumerate(self.cover_sets):
                for u in s:
                    at_vertex.setdefault(u, []).append(k)
            for u, v in mesh.edges:
                self.edge_covers.append(sorted(set(at_vertex.get(u, [])) | set(at_vertex.get(v, []))))
        self.set_edges: list[list[int]] = [[] for _ in self.cover_sets]
        for e, ks in enumerate(self.edge_covers):
            for k in ks:
                self.set_edges[k].append(e)
        obj = self.model.objective
        # cheapest possible edge, for the cover-packing bound
        self.min_edge_cost = 0.0
        if self.edge_covers:
            costs = [obj.get(v, 0.0) for v in self.edge_vars]
            self.min_edge_cost = max(0.0, min(costs)) if costs else 0.0
        self.obj_primary = [(v, c) for v, c in obj.items() if self.is_primary[v]]
        self.obj_derived = [(v, c) for v, c in obj.items() if v in self.defs]
        self.d_coef = None
        if self.validity:
            D = meta["distance"]
            self.d_coef = [obj.get(D[h], 0.0) for h in range(len(D))]
            if any(c < 0 for c in self.d_coef):
                raise ModelError("negative distance weights are not supported")
        self.dist: list[float] | None = None

    # -- assignment and propagation -------------------------------------

    def _assign(self, v: int, x: int, queue: list[int]):
        self.val[v] = x
        self.trail.append(v)
        for r, a in self.var_rows[v]:
            self.row_min[r] += a * x - min(0.0, a)
            queue.append(r)

    def _undo(self, mark: int):
        while len(self.trail) > mark:
            v = self.trail.pop()
            x = self.val[v]
            self.val[v] = -1
            for r, a in self.var_rows[v]:
                self.row_min[r] -= a * x - min(0.0, a)

    def _propagate_rows(self, queue: list[int]) -> bool:
        val = self.val
        while queue:
            r = queue.pop()
            terms, rhs = self.rows[r]
            slack = rhs - self.row_min[r]
            if slack < -EPS:
                return False
            for v, a in terms:
                if val[v] < 0 and abs(a) > slack + EPS:
                    self._assign(v, 0 if a > 0 else 1, queue)
        return True

    def propagate(self, queue: list[int]) -> bool:
        while True:
            if not self._propagate_rows(queue):
                return False
            for paths in self.p2p:
                viable = [p for p in paths if all(self.val[self.edge_vars[e]] != 0 for e in p)]
                if not viable:
                    return False
                if len(viable) == 1:
                    for e in viable[0]:
                        if self.val[self.edge_vars[e]] < 0:
                            self._assign(self.edge_vars[e], 1, queue)
            if self.validity:
                ev = self.edge_vars
                usable = [e for e, v in enumerate(ev) if self.val[v] != 0]
                dist = half_edge_distances(self.model.mesh, usable, self.sinks)
                for e in usable:
                    if math.isinf(dist[2 * e]) and math.isinf(dist[2 * e + 1]):
                        if self.val[ev[e]] == 1:
                            return False
                        self._assign(ev[e], 0, queue)
                self.dist = dist
            if not queue:
                return True

    # -- bounding and branching -----------------------------------------

    def _derived_interval(self, d) -> tuple[int, int]:
        val = self.val
        kind = d[0]
        if kind == "or":
            xs = [val[m] for m in d[1]]
            if 1 in xs:
                return 1, 1
            return (0, 0) if -1 not in xs else (0, 1)
        if kind == "and":
            pos = [val[m] for m in d[1]]
            neg = [val[m] for m in d[2]]
            if 0 in pos or 1 in neg:
                return 0, 0
            if -1 in pos or -1 in neg:
                return 0, 1
            return 1, 1
        ones = sum(1 for m in d[1] if val[m] == 1)
        free = sum(1 for m in d[1] if val[m] < 0)
        if ones >= d[2]:
            return 1, 1
        return (0, 0) if ones + free < d[2] else (0, 1)

    def lower_bound(self) -> float:
        val = self.val
        lb = 0.0
        for v, c in self.obj_primary:
            if val[v] == 1:
                lb += c
            elif val[v] < 0 and c < 0:
                lb += c
        for v, c in self.obj_derived:
            lo, hi = self._derived_interval(self.defs[v])
            lb += c * (lo if c > 0 else hi)
        if self.validity and self.dist is not None and any(self.d_coef):
            dist, dc = self.dist, self.d_coef
            for e, v in enumerate(self.edge_vars):
                if val[v] == 1:
                    lb += min(dc[2 * e] * dist[2 * e], dc[2 * e + 1] * dist[2 * e + 1])
        if self.min_edge_cost > 0:
            lb += self.min_edge_cost * self._cover_packing()
        return lb

    def _cover_packing(self) -> int:
        """Size of a greedy family of open cover sets no single free edge can serve twice."""
        val, ev = self.val, self.edge_vars
        claimed = set()
        count = 0
        for k, edges in enumerate(self.set_edges):
            free = []
            done = False
            for e in edges:
                x = val[ev[e]]
                if x == 1:
                    done = True
                    break
                if x < 0:
                    free.append(e)
            if done or claimed.intersection(free):
                continue
            claimed.update(free)
            count += 1
        return count

    def choose(self):
        val = self.val
        best = None
        for group in self.rooms_by_face:
            if any(val[r] == 1 for r in group):
                continue
            free = [r for r in group if val[r] < 0]
            if free and (best is None or len(free) < len(best)):
                best = free
        if best is not None:
            return best[0], (1, 0)
        ev = self.edge_vars
        if self.edge_covers:
            open_sets = [True] * len(self.cover_sets)
            for e, v in enumerate(ev):
                if val[v] == 1:
                    for k in self.edge_covers[e]:
                        open_sets[k] = False
            best_e, best_n = -1, 0
            for e, v in enumerate(ev):
                if val[v] < 0:
                    n = sum(1 for k in self.edge_covers[e] if open_sets[k])
                    if n > best_n:
                        best_e, best_n = e, n
            if best_e >= 0:
                return ev[best_e], (1, 0)
        for paths in self.p2p:
            if any(all(val[ev[e]] == 1 for e in p) for p in paths):
                continue
            viable = [p for p in paths if all(val[ev[e]] != 0 for e in p)]
            viable.sort(key=lambda p: (sum(1 for e in p if val[ev[e]] < 0), p))
            for e in viable[0]:
                if val[ev[e]] < 0:
                    return ev[e], (1, 0)
        for v in self.primary:
            if val[v] < 0:
                return v, (0, 1)
        return None

    # -- search ----------------------------------------------------------

    def leaf(self):
        pv = {v: self.val[v] for v in self.primary}
        values = complete_assignment(self.model, pv)
        if values is None or self.model.check(values, EPS):
            return
        obj = self.model.objective_value(values)
        if self.best is None or obj < self.best[0] - EPS:
            self.best = (obj, values)
            if self.options.on_incumbent is not None:
                self.options.on_incumbent(obj, self.nodes)

    def _prune_threshold(self) -> float:
        if self.best is None:
            return math.inf
        inc = self.best[0]
        return inc - max(EPS, self.options.gap * abs(inc))

    def run(self) -> NetworkSolution:
        start = time.perf_counter()
        self.best = None
        self.nodes = 0
        self.stopped = False
        budget = self.options.budget()
        deadline = None if self.options.deterministic else start + self.options.time_limit
        open_bounds: list[float] = []

        for v, var in enumerate(self.model.variables):
            if self.is_primary[v] and var.lo == var.hi:
                self.val[v] = int(var.lo)
        self.row_min = [
            sum(a * self.val[v] if self.val[v] >= 0 else min(0.0, a) for v, a in terms)
            for terms, _ in self.rows
        ]
        feasible_root = self.propagate(list(range(len(self.rows))))

        frames = []
        pending = feasible_root
        while True:
            if pending:
                self.nodes += 1
                if budget is not None and self.nodes > budget:
                    self.stopped = True
                elif deadline is not None and self.nodes % 32 == 0 and time.perf_counter() > deadline:
                    self.stopped = True
                if self.stopped:
                    open_bounds.append(self.lower_bound())
                    break
                lb = self.lower_bound()
                if lb < self._prune_threshold():
                    choice = self.choose()
                    if choice is None:
                        self.leaf()
                    else:
                        frames.append([choice[0], choice[1], 0, len(self.trail), lb])
            pending = False
            while frames:
                fr = frames[-1]
                self._undo(fr[3])
                if fr[2] >= len(fr[1]) or fr[4] >= self._prune_threshold():
                    frames.pop()
                    continue
                x = fr[1][fr[2]]
                fr[2] += 1
                queue: list[int] = []
                self._assign(fr[0], x, queue)
                if self.propagate(queue):
                    pending = True
                    break
            if not pending:
                break
        if self.stopped:
            open_bounds += [fr[4] for fr in frames if fr[2] < len(fr[1])]

        wall = time.perf_counter() - start
        if self.best is None:
            status = TIMEOUT if self.stopped else INFEASIBLE
            return NetworkSolution(status, nodes=self.nodes, wall_time=wall)
        obj, values = self.best
        if self.stopped:
            status = FEASIBLE
            bound = min([obj] + open_bounds)
        else:
            status, bound = OPTIMAL, obj
        return make_solution(self.model, values, status, obj, bound, self.nodes, wall)


def make_solution(model: IpModel, values, status, objective, bound, nodes=0, wall=0.0) -> NetworkSolution:
    meta = model.meta
    active, orientation, distances, placements = (), {}, (), ()
    if "edge" in meta:
        active = tuple(e for e, v in enumerate(meta["edge"]) if values[v] > 0.5)
    if "half_edge" in meta:
        H, D = meta["half_edge"], meta["distance"]
        orientation = {h >> 1: h for h in range(len(H)) if values[H[h]] > 0.5}
        distances = tuple(float(values[d]) for d in D)
    if "room" in meta:
        placements = tuple(x for x, r in enumerate(meta["room"]) if values[r] > 0.5)
    return NetworkSolution(
        status,
        objective,
        bound,
        breakdown_of(model, values),
        active,
        orientation,
        distances,
        placements,
        tuple(values),
        nodes,
        wall,
    )


def solve(model: IpModel, options: SolveOptions | None = None) -> NetworkSolution:
    """Solve ``model`` with the built-in branch-and-bound."""
    options = options or SolveOptions()
    return _Search(model, options).run()
