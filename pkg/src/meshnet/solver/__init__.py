"""Solving, LP export and semantic oracles."""

from .bnb import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    TIMEOUT,
    NetworkSolution,
    SolveOptions,
    complete_assignment,
    make_solution,
    solve,
)
from .oracles import (
    DistanceValues,
    ObjectiveValue,
    OracleError,
    ValidityReport,
    active_components,
    check_validity,
    compute_distance_values,
    evaluate_objective,
    feasibility_violations,
    half_edge_distances,
    is_feasible,
    scan_features,
    uncovered_vertices,
)

__all__ = [
    "FEASIBLE",
    "INFEASIBLE",
    "OPTIMAL",
    "TIMEOUT",
    "DistanceValues",
    "NetworkSolution",
    "ObjectiveValue",
    "OracleError",
    "SolveOptions",
    "ValidityReport",
    "active_components",
    "check_validity",
    "complete_assignment",
    "compute_distance_values",
    "evaluate_objective",
    "feasibility_violations",
    "half_edge_distances",
    "is_feasible",
    "make_solution",
    "scan_features",
    "solve",
    "uncovered_vertices",
]
