"""Simulated-annealing comparator over single-edge and short-chain edits.

The search starts from every available edge and repeatedly applies one of
four edits: delete an edge, delete two adjacent edges, delete three
consecutive edges, add an edge. Only edits that keep the network feasible
(validity, coverage, fixings, forbidden features) are candidates; the next
state is drawn with probability proportional to
``exp(-(objective - best candidate objective) / T)``, and ``T`` shrinks
geometrically every iteration. Objectives come from the same oracle the
solver results are checked with.
"""

from __future__ import annotations

import csv
import io
import math
import random
import time
from dataclasses import dataclass, field
from typing import Iterable

from .mesh import Mesh, sample_partition_vertices
from .model.network import available_edges, edge_states, resolve_sinks
from .solver.bnb import FEASIBLE, NetworkSolution
from .solver.oracles import compute_distance_values, evaluate_objective, feasibility_violations
from .spec import FunctionalSpec


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class AnnealSchedule:
    initial_temperature: float = 1.0
    cooling: float = 0.95
    max_iterations: int = 200
    time_limit: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.initial_temperature > 0:
            raise BaselineError("temperature must be positive")
        if not 0 < self.cooling < 1:
            raise BaselineError("cooling factor must lie in (0, 1)")
        if self.max_iterations < 0:
            raise BaselineError("iteration cap must be nonnegative")


@dataclass
class AnnealRun:
    solution: NetworkSolution
    iterations: int
    history: list[float] = field(default_factory=list)  # objective after each step
    states: list[frozenset] = field(default_factory=list)
    wall_time: float = 0.0


def _edits(mesh: Mesh, current: frozenset, available: set, locked: set) -> list[frozenset]:
    """Symmetric differences of every edit applicable to ``current``."""
    out = set()
    removable = sorted(current - locked)
    rem = set(removable)
    for e in removable:
        out.add(frozenset((e,)))
    for e in removable:
        for v in mesh.edges[e]:
            for f in mesh.vertex_edges[v]:
                if f > e and f in rem:
                    out.add(frozenset((e, f)))
    # middle edge e with one neighbour at each end
    for e in removable:
        u, v = mesh.edges[e]
        left = [f for f in mesh.vertex_edges[u] if f != e and f in rem]
        right = [f for f in mesh.vertex_edges[v] if f != e and f in rem]
        for a in left:
            for b in right:
                if a != b:
                    out.add(frozenset((a, e, b)))
    for e in sorted(available - current):
        out.add(frozenset((e,)))
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def _solution(mesh: Mesh, spec: FunctionalSpec, active: frozenset, wall: float) -> NetworkSolution:
    obj = evaluate_objective(mesh, spec, active)
    dv = compute_distance_values(mesh, active, resolve_sinks(mesh, spec))
    return NetworkSolution(
        FEASIBLE,
        obj.total,
        None,
        dict(obj.breakdown),
        tuple(sorted(active)),
        dict(dv.orientation),
        dv.values,
        wall_time=wall,
    )


def anneal(mesh: Mesh, spec: FunctionalSpec, schedule: AnnealSchedule | None = None, check=False) -> AnnealRun:
    """One seeded annealing trajectory; ``check`` re-verifies every state."""
    schedule = schedule or AnnealSchedule()
    start = time.perf_counter()
    rng = random.Random(schedule.seed)
    available = available_edges(mesh, spec)
    locked, _ = edge_states(mesh, spec)
    sampled = sample_partition_vertices(mesh, spec.partition_seed) if spec.point_to_point else None

    def feasible(s):
        return not feasibility_violations(mesh, spec, s, sampled)

    def objective(s):
        return evaluate_objective(mesh, spec, s).total

    current = frozenset(available)
    if not feasible(current):
        raise BaselineError("the all-edges start is not feasible")
    cur_obj = objective(current)
    best, best_obj = current, cur_obj
    history, states = [cur_obj], [current]
    temp = schedule.initial_temperature
    it = 0
    cache: dict[frozenset, float | None] = {current: cur_obj}
    while it < schedule.max_iterations:
        if schedule.time_limit is not None and time.perf_counter() - start > schedule.time_limit:
            break
        cands = []
        for diff in _edits(mesh, current, available, locked):
            nxt = current ^ diff
            if nxt not in cache:
                cache[nxt] = objective(nxt) if feasible(nxt) else None
            if cache[nxt] is not None:
                cands.append((cache[nxt], sorted(diff), nxt))
        if not cands:
            break
        cands.sort(key=lambda c: (c[0], len(c[1]), c[1]))
        low = cands[0][0]
        weights = [math.exp(-(c[0] - low) / temp) for c in cands]
        pick = rng.choices(range(len(cands)), weights=weights)[0]
        cur_obj, _, current = cands[pick]
        if check and not feasible(current):
            raise AssertionError("annealing reached an infeasible state")
        it += 1
        history.append(cur_obj)
        states.append(current)
        if cur_obj < best_obj:
            best, best_obj = current, cur_obj
        temp *= schedule.cooling
    wall = time.perf_counter() - start
    return AnnealRun(_solution(mesh, spec, best, wall), it, history, states, wall)


def stochastic_search(mesh: Mesh, spec: FunctionalSpec, schedule: AnnealSchedule | None = None) -> NetworkSolution:
    return anneal(mesh, spec, schedule).solution


@dataclass(frozen=True)
class BaselineRow:
    seed: int
    iterations: int
    objective: float
    wall_time: float


def restarts(mesh: Mesh, spec: FunctionalSpec, schedule: AnnealSchedule, seeds: Iterable[int]):
    """Independent runs, one per seed, as ``(rows, best run)``."""
    rows, best = [], None
    for seed in seeds:
        run = anneal(mesh, spec, AnnealSchedule(
            schedule.initial_temperature, schedule.cooling, schedule.max_iterations, schedule.time_limit, seed))
        rows.append(BaselineRow(seed, run.iterations, run.solution.objective, run.wall_time))
        if best is None or run.solution.objective < best.solution.objective:
            best = run
    return rows, best


def rows_to_csv(rows: list[BaselineRow], exact: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "iterations", "objective", "wall_time"])
    for r in rows:
        w.writerow([r.seed, r.iterations, repr(float(r.objective)), f"{r.wall_time:.6f}"])
    if exact is not None:
        w.writerow(["exact", "", repr(float(exact)), ""])
    return buf.getvalue()
