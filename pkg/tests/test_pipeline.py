import pytest

from meshnet.mesh import dump_document, grid_mesh
from meshnet.model import build_model
from meshnet.pipeline import (
    LevelPlan,
    LevelSpec,
    PipelineError,
    PlanError,
    load_plan,
    plan_from_dict,
    plan_to_dict,
    ramp,
    render_svg,
    run_scenario,
    run_street_pipeline,
    single_level_plan,
    validate_document,
)
from meshnet.solver import compute_distance_values, solve
from meshnet.solver.oracles import scan_features
from meshnet.solver.solution import dump_solution, solution_to_dict
from meshnet.spec import spec_from_dict
from meshnet.tiling import rectangle

from support import STREET_PLAN, components, game_fixture, street_mesh


def degrees(mesh, edges):
    deg = {}
    for e in edges:
        for v in mesh.edges[e]:
            deg[v] = deg.get(v, 0) + 1
    return deg


# -- plans --------------------------------------------------------------------


def test_plan_round_trip():
    plan = load_plan(STREET_PLAN)
    assert [lv.name for lv in plan.levels] == ["arterial", "collector", "local"]
    assert plan.groups == ((0,), (1, 2))
    assert plan_from_dict(plan_to_dict(plan)) == plan


@pytest.mark.parametrize(
    "cfg",
    [
        {"levels": []},
        {"levels": [{"spec": {"coverage_radius": 1}}, {"spec": {"coverage_radius": 2}}]},
        {"levels": [{"sinks": "inherit"}]},
        {"levels": [{"spec": {}}], "smoothing": {"groups": [[0], [0]]}},
        {"levels": [{"spec": {}, "colour": 1}]},
        {"levels": [{"spec": {"mode": "floorplan"}}]},
        {"levels": [{}], "extra": 1},
    ],
)
def test_bad_plans(cfg):
    with pytest.raises(PlanError):
        plan_from_dict(cfg)


def test_explicit_smoothing_weights():
    plan = load_plan(STREET_PLAN)
    assert plan.weights(0) == (1.0, 4.0, 1.0)
    lv = LevelSpec(spec_from_dict({}), smoothing_weights=(2, 2, 2))
    assert LevelPlan((lv,)).weights(0) == (2.0, 2.0, 2.0)


# -- street pipeline ----------------------------------------------------------


def test_single_level_equals_direct_solve():
    m = grid_mesh(3, 3, sinks=[1])
    spec = spec_from_dict({"coverage_radius": 1, "exclude_boundary_edges": False})
    res = run_street_pipeline(m, single_level_plan(spec, smooth=False))
    direct = solve(build_model(m, spec))
    assert res.levels[0].solution.active_edges == direct.active_edges
    assert res.levels[0].solution.objective == direct.objective


@pytest.fixture(scope="module")
def street():
    return run_street_pipeline(street_mesh(), load_plan(STREET_PLAN))


def test_street_level_sizes(street):
    assert [len(lv.solution.active_edges) for lv in street.levels] == [4, 24, 29]


def test_levels_nest(street):
    l0, l1, l2 = street.levels
    children = {e for e, p in enumerate(l1.mesh.edge_parent) if p in set(l0.solution.active_edges)}
    assert children <= set(l1.solution.active_edges)
    assert set(l1.solution.active_edges) <= set(l2.solution.active_edges)


def test_dead_ends_only_at_last_level(street):
    for lv in street.levels[:2]:
        sinks = lv.mesh.sinks
        assert all(d != 1 or v in sinks for v, d in degrees(lv.mesh, lv.solution.active_edges).items())


def test_child_sinks_are_parent_vertices(street):
    l0, l1, _ = street.levels
    parent = set(l0.solution.active_edges)
    inherited = [e for e, p in enumerate(l1.mesh.edge_parent) if p in parent]
    assert l1.mesh.sinks == {v for e in inherited for v in l1.mesh.edges[e]}


def test_smoothing_keeps_vertex_count(street):
    assert street.positions.shape == (street.levels[-1].mesh.n_vertices, 2)
    assert street.snakes and street.energies
    for energies in street.energies:
        assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_street_pipeline_is_deterministic(street):
    again = run_street_pipeline(street_mesh(), load_plan(STREET_PLAN))
    for a, b in zip(street.levels, again.levels):
        assert dump_solution(a.mesh, a.solution) == dump_solution(b.mesh, b.solution)
        assert a.result.lp == b.result.lp
    assert street.geometry() == again.geometry()


def test_infeasible_level_is_reported():
    plan = plan_from_dict({"levels": [{"spec": {"sinks": [4], "coverage_radius": 0, "features": {"branch": "forbidden"}}}]})
    with pytest.raises(PipelineError) as exc:
        run_street_pipeline(grid_mesh(2, 2), plan)
    assert exc.value.stage.startswith("level 0")


# -- single-solve scenarios ---------------------------------------------------


def test_circular_game_level():
    m, spec, templates = game_fixture(branch="forbidden", dead_end="forbidden")
    res = run_scenario(m, spec, templates)
    edges = res.solution.active_edges
    deg = degrees(m, edges)
    assert set(deg.values()) == {2}
    assert len(components(m, edges)) == 1


def test_linear_game_level():
    m, spec, templates = game_fixture(branch="forbidden", dead_end="forbidden", sinks=(1, 21))
    res = run_scenario(m, spec, templates)
    edges = res.solution.active_edges
    deg = degrees(m, edges)
    assert max(deg.values()) == 2
    assert sorted(v for v, d in deg.items() if d == 1) == [1, 21]
    assert len(components(m, edges)) == 1 and len(edges) == len(deg) - 1


def test_floorplan_visits_every_elevator():
    elevators = [7, 11, 13, 17]
    m = grid_mesh(4, 4, sinks=elevators)
    spec = spec_from_dict(
        {"mode": "floorplan", "coverage_radius": 1, "fixings": {"vertices_active": elevators}}
    )
    templates = [rectangle("room", 2, 2)]
    res = run_scenario(m, spec, templates)
    touched = {v for e in res.solution.active_edges for v in m.edges[e]}
    assert set(elevators) <= touched
    text = dump_document(solution_to_dict(m, res.solution, rooms=res.rooms, templates=templates))
    assert validate_document(text, spec, templates).passed


def test_distance_values_post_processed():
    m = grid_mesh(3, 2, sinks=[0])
    spec = spec_from_dict({"exclude_boundary_edges": False})
    sol = run_scenario(m, spec).solution
    assert set(sol.orientation) == set(sol.active_edges)
    dv = compute_distance_values(m, sol.active_edges, [0])
    assert sol.orientation == dv.orientation
    assert all(sol.distances[h] == dv.values[h] for h in sol.orientation.values())


def test_export_only_scenario():
    res = run_scenario(grid_mesh(2, 2, sinks=[0]), spec_from_dict({}), solver="export")
    assert res.solution is None and res.lp.startswith("\\")


def test_bad_solver_name():
    with pytest.raises(PipelineError):
        run_scenario(grid_mesh(2, 2, sinks=[0]), spec_from_dict({}), solver="cplex")


def test_model_errors_carry_stage():
    with pytest.raises(PipelineError) as exc:
        run_scenario(grid_mesh(2, 2), spec_from_dict({}))
    assert exc.value.stage == "scenario/model"


# -- rendering and reports ----------------------------------------------------


def test_wireframe_only_render():
    m = grid_mesh(2, 2)
    svg = render_svg(m)
    assert svg.count("<line") == m.n_edges
    assert 'id="legend"' not in svg


def test_render_ramp_and_determinism():
    m = grid_mesh(2, 1, sinks=[2])
    spec = spec_from_dict({"exclude_boundary_edges": False, "coverage_radius": 2})
    sol = run_scenario(m, spec).solution
    a = render_svg(m, [sol])
    assert a == render_svg(m, [sol])
    assert f'stroke="{ramp(0.0)}"' in a
    assert ramp(0.0) == "#313695" and ramp(1.0) == "#d73027"
    assert 'id="legend"' in a


def test_room_fills():
    m = grid_mesh(2, 2, sinks=[0])
    spec = spec_from_dict({"mode": "floorplan"})
    templates = [rectangle("room", 2, 2)]
    res = run_scenario(m, spec, templates)
    svg = render_svg(m, [solution_to_dict(m, res.solution, rooms=res.rooms, templates=templates)])
    assert svg.count("<polygon") == 4


def test_report_catches_tampered_documents():
    m = grid_mesh(3, 3, sinks=[1])
    spec = spec_from_dict({"coverage_radius": 1, "exclude_boundary_edges": False, "features": {"dead_end": "forbidden"}})
    sol = run_scenario(m, spec).solution
    doc = solution_to_dict(m, sol)
    assert validate_document(dump_document(doc), spec).passed
    doc["active_edges"] = doc["active_edges"][1:]
    doc["orientation"] = doc["orientation"][1:]
    rep = validate_document(dump_document(doc), spec)
    failed = {name for name, ok, _ in rep.checks if not ok}
    assert "forbidden_dead_end" in failed and not rep.passed
    assert rep.to_csv().splitlines()[-1] == "verdict,FAIL,"


def test_report_matches_feature_scan():
    m, spec, templates = game_fixture(branch="forbidden", dead_end="forbidden")
    res = run_scenario(m, spec, templates)
    feats = scan_features(m, res.solution.active_edges, m.sinks, spec.patterns)
    assert not feats["branch"] and not feats["dead_end"]
    text = dump_document(solution_to_dict(m, res.solution, rooms=res.rooms, templates=templates))
    assert validate_document(text, spec, templates).passed
