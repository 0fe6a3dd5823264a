"""Integer-program construction for mesh network design."""

from __future__ import annotations

from ..mesh import Mesh
from ..spec import FunctionalSpec
from .ipmodel import BINARY, CONTINUOUS, Constraint, IpModel, ModelError, Variable
from .network import (
    apply_user_fixings,
    assemble_objective,
    available_edges,
    build_coverage,
    build_local_features,
    build_point_to_point,
    build_validity,
    edge_states,
    forced_route_paths,
    new_model,
    objective_weights,
    resolve_sinks,
)


def build_model(mesh: Mesh, spec: FunctionalSpec, templates=None, sampled=None) -> IpModel:
    """Assemble the full integer program for ``spec.mode``.

    Tiling modes replace the coverage rows by the room-tiling rows and need
    a template catalogue.
    """
    from ..tiling import build_room_count_constraints, build_tiling_constraints, enumerate_placements

    model = new_model(mesh, spec)
    build_validity(mesh, spec, model)
    if spec.mode == "network":
        build_coverage(mesh, spec, model)
    else:
        if not templates:
            raise ModelError(f"{spec.mode} mode needs room templates")
        placements = enumerate_placements(mesh, templates)
        build_tiling_constraints(mesh, placements, spec.mode, model)
        build_room_count_constraints(model.meta["rooms"], templates, model)
        model.meta["templates"] = list(templates)
    if spec.point_to_point:
        build_point_to_point(mesh, spec, sampled, model)
    build_local_features(mesh, spec, model)
    apply_user_fixings(mesh, spec, model)
    assemble_objective(mesh, spec, model)
    return model


__all__ = [
    "BINARY",
    "CONTINUOUS",
    "Constraint",
    "IpModel",
    "ModelError",
    "Variable",
    "apply_user_fixings",
    "assemble_objective",
    "available_edges",
    "build_coverage",
    "build_local_features",
    "build_model",
    "build_point_to_point",
    "build_validity",
    "edge_states",
    "forced_route_paths",
    "new_model",
    "objective_weights",
    "resolve_sinks",
]
