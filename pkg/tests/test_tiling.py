import itertools

import pytest

from meshnet.mesh import Mesh, grid_mesh
from meshnet.model import build_model, new_model, resolve_sinks
from meshnet.solver import check_validity, solve
from meshnet.spec import spec_from_dict
from meshnet.tiling import (
    RoomTemplate,
    TilingError,
    build_room_count_constraints,
    build_tiling_constraints,
    dump_templates,
    enumerate_placements,
    export_grid_map,
    grid_addressing,
    load_templates,
    placement_edges,
    rectangle,
)

from support import floorplan_fixture, game_fixture

L_TROMINO = RoomTemplate("L", frozenset({(0, 0), (1, 0), (0, 1)}))


def exact_covers(n_faces, placements, obstacles=frozenset()):
    """All placement index sets covering every free face exactly once (plain recursion)."""
    out = []

    def rec(covered, chosen):
        free = [f for f in range(n_faces) if f not in covered and f not in obstacles]
        if not free:
            out.append(tuple(chosen))
            return
        f = free[0]
        for x, p in enumerate(placements):
            if f in p.faces and not covered & set(p.faces):
                rec(covered | set(p.faces), chosen + [x])

    rec(frozenset(), [])
    return out


def test_two_by_two_room_on_two_by_two_mesh():
    assert len(enumerate_placements(grid_mesh(2, 2), [rectangle("r", 2, 2)])) == 1


def test_two_by_two_room_on_three_by_three_mesh():
    assert len(enumerate_placements(grid_mesh(3, 3), [rectangle("r", 2, 2)])) == 4


def test_l_tromino_placements_match_oracle():
    m = grid_mesh(2, 2)
    got = {p.faces for p in enumerate_placements(m, [L_TROMINO])}
    # every 3-face subset of the 2x2 block is an L
    expected = {tuple(sorted(c)) for c in itertools.combinations(range(4), 3)}
    assert got == expected and len(got) == 4


def test_symmetry_flags():
    bar = rectangle("bar", 2, 1, rotations=False, reflections=False)
    assert len(bar.variants()) == 1
    assert len(rectangle("bar", 2, 1).variants()) == 2
    s = RoomTemplate("S", frozenset({(0, 0), (1, 0), (1, 1), (2, 1)}))
    assert len(s.variants()) == 4
    assert len(RoomTemplate("S", s.cells, reflections=False).variants()) == 2


def test_placements_avoid_obstacle_faces():
    m = grid_mesh(3, 3, obstacle_faces=[4])
    assert all(4 not in p.faces for p in enumerate_placements(m, [rectangle("r", 2, 2)]))


def test_inner_and_boundary_edges():
    m = grid_mesh(2, 2)
    inner, boundary = placement_edges(m, [0, 1, 2, 3])
    assert len(inner) == 4 and len(boundary) == 8
    assert not set(inner) & set(boundary)


def test_template_validation():
    with pytest.raises(TilingError):
        RoomTemplate("gap", frozenset({(0, 0), (2, 0)}))
    with pytest.raises(TilingError):
        RoomTemplate("empty", frozenset())
    with pytest.raises(TilingError):
        rectangle("r", 1, 1, min_count=2, max_count=1)


def test_non_grid_mesh_rejected():
    tri = Mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    with pytest.raises(TilingError):
        grid_addressing(tri)


def test_grid_addressing_recovers_coordinates():
    m = grid_mesh(3, 2)
    coords = grid_addressing(m)
    assert sorted(coords.values()) == sorted((x, y) for x in range(3) for y in range(2))


def tiling_model(mesh, templates, mode):
    spec = spec_from_dict({"mode": mode})
    model = new_model(mesh, spec)
    placements = enumerate_placements(mesh, templates)
    build_tiling_constraints(mesh, placements, mode, model)
    build_room_count_constraints(model.meta["rooms"], templates, model)
    return model


def test_every_cover_of_four_by_four_uses_four_rooms():
    m = grid_mesh(4, 4)
    placements = enumerate_placements(m, [rectangle("room", 2, 2)])
    covers = exact_covers(m.n_faces, placements)
    assert covers and all(len(c) == 4 for c in covers)


def test_floorplan_fixture_selects_four_rooms():
    m, spec, templates = floorplan_fixture()
    sol = solve(build_model(m, spec, templates))
    assert sol.status == "optimal"
    assert len(sol.placements) == 4


def test_uncoverable_face_reported():
    m = grid_mesh(3, 1)
    with pytest.raises(TilingError):
        tiling_model(m, [rectangle("r", 2, 2)], "floorplan")


def test_obstacle_faces_get_zero_rhs():
    m = grid_mesh(3, 1, obstacle_faces=[1])
    model = tiling_model(m, [rectangle("cell", 1, 1)], "floorplan")
    rows = {r.name: r for r in model.rows("tiling")}
    assert "tile_1" not in rows
    assert rows["tile_0"].rhs == 1


def _substitute(model, rooms_on, edges_on):
    values = [0.0] * model.n_vars
    for x in rooms_on:
        values[model.meta["room"][x]] = 1.0
    for e in edges_on:
        values[model.meta["edge"][e]] = 1.0
    return values


def test_floorplan_room_with_active_inner_edge_is_infeasible():
    m = grid_mesh(2, 2)
    model = tiling_model(m, [rectangle("r", 2, 2)], "floorplan")
    room = model.meta["rooms"][0]
    door = room.boundary_edges[0]
    ok = _substitute(model, [0], [door])
    bad = _substitute(model, [0], [door, room.inner_edges[0]])
    rows = model.rows("room_inner") + model.rows("room_door")
    assert all(r.violation(ok) == 0 for r in rows)
    assert any(r.violation(bad) > 0 for r in rows)
    assert any(r.violation(_substitute(model, [0], [])) > 0 for r in rows)


def test_gamelevel_room_with_active_boundary_edge_is_infeasible():
    m = grid_mesh(2, 1)
    model = tiling_model(m, [rectangle("hall", 2, 1)], "gamelevel")
    x = next(i for i, p in enumerate(model.meta["rooms"]) if len(p.faces) == 2)
    room = model.meta["rooms"][x]
    ok = _substitute(model, [x], [room.inner_edges[0]])
    bad = _substitute(model, [x], [room.inner_edges[0], room.boundary_edges[0]])
    rows = model.rows("block_inner") + model.rows("block_wall")
    assert all(r.violation(ok) == 0 for r in rows)
    assert any(r.violation(bad) > 0 for r in rows)


def test_count_rows():
    m = grid_mesh(4, 4)
    boss = rectangle("boss", 2, 2, min_count=1, max_count=1)
    model = tiling_model(m, [boss, rectangle("hall", 2, 1)], "gamelevel")
    rows = model.rows("room_count")
    assert [r.name for r in rows] == ["count_0_lo", "count_0_hi"]
    boss_vars = sorted(p.var for p in model.meta["rooms"] if p.template == 0)
    assert all(sorted(v for v, _ in r.terms) == boss_vars for r in rows)
    assert (rows[0].rhs, rows[1].rhs) == (1, 1)


def test_unbounded_template_has_no_count_rows():
    model = tiling_model(grid_mesh(2, 2), [rectangle("cell", 1, 1)], "floorplan")
    assert model.rows("room_count") == []


def test_zero_bound_bans_template():
    model = tiling_model(grid_mesh(2, 2), [rectangle("cell", 1, 1), rectangle("big", 2, 2, max_count=0)], "floorplan")
    for p in model.meta["rooms"]:
        if p.template == 1:
            assert model.variables[p.var].hi == 0


def test_game_fixture_boss_appears_once():
    m, spec, templates = game_fixture()
    model = build_model(m, spec, templates)
    sol = solve(model)
    assert sol.status == "optimal"
    rooms = model.meta["rooms"]
    assert sum(1 for x in sol.placements if rooms[x].template == 0) == 1


def _tiling_brute_force(mesh, spec, templates):
    placements = enumerate_placements(mesh, templates)
    covers = exact_covers(mesh.n_faces, placements, mesh.obstacle_faces)
    sinks = resolve_sinks(mesh, spec)
    best = None
    for bits in itertools.product((0, 1), repeat=mesh.n_edges):
        edges = {e for e, b in enumerate(bits) if b}
        if not check_validity(mesh, edges, sinks).valid:
            continue
        length = sum(float(mesh.lengths[e]) for e in edges)
        if best is not None and length >= best:
            continue
        for cover in covers:
            ok = True
            for x in cover:
                p = placements[x]
                on_inner = sum(e in edges for e in p.inner_edges)
                on_bound = sum(e in edges for e in p.boundary_edges)
                if spec.mode == "floorplan":
                    ok = not on_inner and on_bound > 0
                else:
                    ok = on_inner > 0 and not on_bound
                if not ok:
                    break
            if ok:
                counts = [sum(1 for x in cover if placements[x].template == t) for t in range(len(templates))]
                ok = all(
                    t.min_count <= c and (t.max_count is None or c <= t.max_count) for t, c in zip(templates, counts)
                )
            if ok:
                best = length
                break
    return best


@pytest.mark.parametrize(
    "mode, templates, sinks",
    [
        ("floorplan", [rectangle("cell", 1, 1), rectangle("hall", 2, 1)], [0]),
        ("floorplan", [rectangle("hall", 2, 1)], [4]),
        ("gamelevel", [rectangle("hall", 2, 1), rectangle("box", 2, 2)], [1]),
        ("gamelevel", [rectangle("hall", 2, 1, min_count=2)], [3, 5]),
    ],
)
def test_tiling_matches_brute_force(mode, templates, sinks):
    m = grid_mesh(2, 2, sinks=sinks)
    spec = spec_from_dict({"mode": mode})
    expected = _tiling_brute_force(m, spec, templates)
    sol = solve(build_model(m, spec, templates))
    if expected is None:
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(expected, abs=1e-9)


def test_template_catalogue_round_trip():
    text = """
templates:
  - name: boss
    size: [2, 2]
    count: 1
  - name: ell
    cells: [[0, 0], [1, 0], [0, 1]]
    reflections: false
  - name: hall
    size: [2, 1]
    count: {min: 0, max: 3}
"""
    templates = load_templates(text)
    assert [t.name for t in templates] == ["boss", "ell", "hall"]
    assert (templates[0].min_count, templates[0].max_count) == (1, 1)
    assert templates[1].reflections is False
    assert load_templates(dump_templates(templates)) == templates


def test_catalogue_rejects_unknown_keys():
    with pytest.raises(TilingError):
        load_templates("templates:\n  - {name: a, size: [1, 1], colour: red}\n")


def test_grid_map_export():
    m, spec, templates = floorplan_fixture()
    model = build_model(m, spec, templates)
    sol = solve(model)
    text = export_grid_map(m, templates, model.meta["rooms"], sol.placements, sol.active_edges)
    lines = text.splitlines()
    assert lines[0] == "# meshnet grid map v1"
    faces = lines[lines.index("[faces]") + 2 : lines.index("[edges]")]
    assert len(faces) == m.n_faces
    assert {ln.split()[3] for ln in faces} == {"0", "1", "2", "3"}
    edges = lines[lines.index("[edges]") + 2 :]
    assert sum(int(ln.split()[3]) for ln in edges) == len(sol.active_edges)
