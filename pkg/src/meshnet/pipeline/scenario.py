"""Single-solve flows: network, floorplan and gamelevel scenarios."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..mesh import Mesh, sample_partition_vertices
from ..model import build_model, resolve_sinks
from ..model.ipmodel import IpModel, ModelError
from ..solver.bnb import NetworkSolution, SolveOptions, solve
from ..solver.lp import export_lp
from ..solver.oracles import compute_distance_values
from ..spec import FunctionalSpec

SOLVERS = ("builtin", "highs", "export")


class PipelineError(RuntimeError):
    """A stage of a pipeline failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str, solution: NetworkSolution | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.solution = solution


@dataclass
class ScenarioResult:
    mesh: Mesh
    spec: FunctionalSpec
    model: IpModel
    solution: NetworkSolution | None
    lp: str
    templates: list | None = None
    sampled: dict | None = None

    @property
    def rooms(self):
        return self.model.meta.get("rooms")


def with_distance_values(mesh: Mesh, spec: FunctionalSpec, solution: NetworkSolution) -> NetworkSolution:
    """Replace orientations and distance values by the oracle's minimal ones."""
    if not solution.feasible:
        return solution
    dv = compute_distance_values(mesh, solution.active_edges, resolve_sinks(mesh, spec))
    return dataclasses.replace(solution, orientation=dict(dv.orientation), distances=dv.values)


def solve_model(model: IpModel, options: SolveOptions, solver: str = "builtin") -> NetworkSolution | None:
    if solver == "builtin":
        return solve(model, options)
    if solver == "highs":
        from ..solver.highs import highs_available, solve_with_highs

        if not highs_available():
            raise PipelineError("solve", "the highs backend needs the highspy package")
        return solve_with_highs(model, options)
    if solver == "export":
        return None
    raise PipelineError("solve", f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")


def run_scenario(
    mesh: Mesh,
    spec: FunctionalSpec,
    templates=None,
    options: SolveOptions | None = None,
    solver: str = "builtin",
    stage: str = "scenario",
) -> ScenarioResult:
    """Build, export and solve one model; distance values come from the oracle when unweighted.

    With ``solver="export"`` nothing is solved and ``solution`` is None.
    """
    options = options or SolveOptions()
    sampled = sample_partition_vertices(mesh, spec.partition_seed) if spec.point_to_point else None
    try:
        model = build_model(mesh, spec, templates, sampled)
    except (ModelError, ValueError) as exc:
        raise PipelineError(f"{stage}/model", str(exc)) from exc
    lp = export_lp(model)
    solution = solve_model(model, options, solver)
    if solution is not None:
        if not solution.feasible:
            raise PipelineError(f"{stage}/solve", f"solver status {solution.status}", solution)
        if spec.distance_weight == 0:
            solution = with_distance_values(mesh, spec, solution)
    return ScenarioResult(mesh, spec, model, solution, lp, list(templates) if templates else None, sampled)
