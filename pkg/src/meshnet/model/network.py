"""Network-design integer program: variables, constraint families, objective.

Variable names encode the mesh entity they stand for, so an exported LP
file can be read back against the mesh:

=========  ==============================================================
``E_u_v``  edge ``{u, v}`` is active
``H_i_j``  half-edge ``i -> j`` is active
``V_y``    vertex ``y`` is active
``D_i_j``  distance value of half-edge ``i -> j`` (continuous)
``L_i_j_k``  successor ``j -> k`` certifies ``i -> j``
``P_a_b_x``  ``x``-th candidate path between sub-meshes ``a`` and ``b``
``N_i_j``  some edge at ``j`` other than ``{i, j}`` is active
``Q_i_j``  ``{i, j}`` is active and ``j`` is a dead-end (penalised)
``B_y``    vertex ``y`` has more than two active edges (penalised)
``ZZ_i_j_w`` / ``ZP_i_j_w``  zig-zag / proximity configuration present
``T_i_j``  T-junction at ``j`` with the stem missing along ``i -> j``
``R_x``    room placement ``x`` is selected
=========  ==============================================================

``model.meta["defs"]`` records, for every derived indicator, its meaning as a
function of edge variables: ``("or", vars)``, ``("and", pos, neg)`` or
``("atleast", vars, k)``. The built-in solver relies on it.
"""

from __future__ import annotations

from ..mesh import Mesh, MeshError, coverage_neighborhood, enumerate_near_shortest_paths
from ..mesh import adjacent_partition_pairs, sample_partition_vertices
from ..spec import FunctionalSpec
from .ipmodel import CONTINUOUS, IpModel, ModelError
from .patterns import enumerate_patterns


def resolve_sinks(mesh: Mesh, spec: FunctionalSpec) -> frozenset[int]:
    if spec.sinks == "mesh":
        sinks = mesh.sinks
    elif spec.sinks == "boundary":
        sinks = mesh.boundary_vertices
    else:
        sinks = frozenset(spec.sinks)
    for v in sinks:
        if not 0 <= v < mesh.n_vertices:
            raise ModelError(f"sink {v} out of range")
    return frozenset(sinks)


def _edge_ids(mesh: Mesh, pairs) -> set[int]:
    try:
        return {mesh.edge_id(u, v) for u, v in pairs}
    except MeshError as exc:
        raise ModelError(str(exc)) from None


def hard_inactive_edges(mesh: Mesh, spec: FunctionalSpec) -> set[int]:
    """Edges that may never be active: user bans, obstacles, banned vertices."""
    out = set(mesh.fixed_inactive) | set(mesh.obstacle_edges) | _edge_ids(mesh, spec.edges_inactive)
    for v in set(mesh.obstacle_vertices) | set(spec.vertices_inactive):
        if not 0 <= v < mesh.n_vertices:
            raise ModelError(f"vertex {v} out of range")
        out.update(mesh.vertex_edges[v])
    return out


def forced_route_paths(mesh: Mesh, spec: FunctionalSpec) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Each forced route as ``(edges, vertices)``: the lexicographically smallest shortest path."""
    if not spec.forced_routes:
        return []
    banned = hard_inactive_edges(mesh, spec)
    allowed = {e for e in range(mesh.n_edges) if e not in banned}
    if spec.excludes_boundary:
        allowed -= mesh.boundary_edges
    out = []
    for a, b in spec.forced_routes:
        if a == b:
            raise ModelError("forced route endpoints must differ")
        try:
            paths = enumerate_near_shortest_paths(mesh, a, b, 0, allowed)
        except MeshError as exc:
            raise ModelError(f"forced route {a}-{b}: {exc}") from None
        out.append((paths[0].edges, paths[0].vertices))
    return out


def edge_states(mesh: Mesh, spec: FunctionalSpec) -> tuple[set[int], set[int]]:
    """``(forced_active, forced_inactive)`` edge sets implied by annotations and spec."""
    banned = hard_inactive_edges(mesh, spec)
    active = set(mesh.fixed_active) | _edge_ids(mesh, spec.edges_active)
    for edges, _ in forced_route_paths(mesh, spec):
        active.update(edges)
    clash = active & banned
    if clash:
        e = min(clash)
        raise ModelError(f"contradictory fixings: edge {mesh.edges[e]} is forced both active and inactive")
    inactive = set(banned)
    if spec.excludes_boundary:
        inactive |= mesh.boundary_edges - active
    return active, inactive


def available_edges(mesh: Mesh, spec: FunctionalSpec) -> set[int]:
    _, inactive = edge_states(mesh, spec)
    return {e for e in range(mesh.n_edges) if e not in inactive}


def _he_name(mesh: Mesh, prefix: str, h: int) -> str:
    return f"{prefix}_{mesh.he_tail[h]}_{mesh.he_head[h]}"


def new_model(mesh: Mesh, spec: FunctionalSpec) -> IpModel:
    """An empty model with one edge indicator per mesh edge."""
    model = IpModel(mesh=mesh, spec=spec)
    model.meta["edge"] = [model.add_var(f"E_{u}_{v}") for u, v in mesh.edges]
    model.meta["defs"] = {}
    model.meta["terms"] = {}
    model.meta["primary"] = list(model.meta["edge"])
    return model


def build_validity(mesh: Mesh, spec: FunctionalSpec, model: IpModel) -> IpModel:
    """No-island rows (successor certificates, half-edge/edge and vertex links)."""
    sinks = resolve_sinks(mesh, spec)
    if not sinks:
        raise ModelError("the no-island constraints need at least one sink")
    meta = model.meta
    meta["sinks"] = tuple(sorted(sinks))
    n_he = 2 * mesh.n_edges
    if spec.tight_big_m:
        d_max = mesh.delta_all / 2.0
        big_m = d_max + float(mesh.lengths.max())
    else:
        d_max = big_m = mesh.delta_all
    meta["big_m"] = big_m
    meta["half_edge"] = [model.add_var(_he_name(mesh, "H", h)) for h in range(n_he)]
    meta["distance"] = [
        model.add_var(_he_name(mesh, "D", h), CONTINUOUS, 0.0, d_max) for h in range(n_he)
    ]
    H, D = meta["half_edge"], meta["distance"]
    succ = {}
    for h in range(n_he):
        i, j = int(mesh.he_tail[h]), int(mesh.he_head[h])
        if j in sinks:
            continue
        ls = []
        for s in mesh.successors(h):
            k = int(mesh.he_head[s])
            lv = model.add_var(f"L_{i}_{j}_{k}")
            succ[(h, s)] = lv
            ls.append(lv)
            model.add_row(f"eq1_{i}_{j}_{k}", [(lv, 1), (H[s], -1)], "<=", 0, "successor_active")
            model.add_row(
                f"eq2_{i}_{j}_{k}",
                [(D[s], 1), (D[h], -1), (lv, big_m)],
                "<=",
                big_m - mesh.he_length(h),
                "successor_distance",
            )
        model.add_row(f"eq3_{i}_{j}", [(H[h], 1)] + [(lv, -1) for lv in ls], "<=", 0, "successor_exists")
    meta["succ"] = succ

    E = meta["edge"]
    for e, (u, v) in enumerate(mesh.edges):
        model.add_range(f"eq4_{u}_{v}", [(H[2 * e], 1), (H[2 * e + 1], 1), (E[e], -2)], -1, 0, "edge_link")

    meta["vertex"] = []
    for y in range(mesh.n_vertices):
        vv = model.add_var(f"V_{y}")
        meta["vertex"].append(vv)
        es = mesh.vertex_edges[y]
        n = len(es)
        model.add_range(f"eq5_{y}", [(E[e], 1) for e in es] + [(vv, -n)], 1 - n, 0, "vertex_link")
        meta["defs"][vv] = ("or", [E[e] for e in es])
    meta["terms"]["distance"] = list(D)
    return model


def build_coverage(mesh: Mesh, spec: FunctionalSpec, model: IpModel) -> IpModel:
    """Every non-obstacle vertex has an active vertex within the coverage radius."""
    if "vertex" not in model.meta:
        raise ModelError("coverage needs the vertex indicators from build_validity")
    V = model.meta["vertex"]
    obstacles = mesh.obstacle_vertices
    cover_sets = {}
    for v in range(mesh.n_vertices):
        if v in obstacles:
            continue
        cover = sorted(coverage_neighborhood(mesh, v, spec.coverage_radius) - obstacles)
        if not cover:
            raise ModelError(f"vertex {v} can only be covered by obstacle vertices")
        cover_sets[v] = tuple(cover)
        model.add_row(f"cover_{v}", [(V[u], 1) for u in cover], ">=", 1, "coverage")
    model.meta["cover_sets"] = cover_sets
    return model


def candidate_paths(mesh: Mesh, spec: FunctionalSpec, sampled: dict[str, int]):
    """Near-shortest paths between sampled vertices of every adjacent sub-mesh pair."""
    allowed = available_edges(mesh, spec)
    labels = sorted(mesh.partition)
    out = []
    for la, lb in adjacent_partition_pairs(mesh):
        a, b = sampled[la], sampled[lb]
        if a == b:
            continue
        try:
            paths = enumerate_near_shortest_paths(mesh, a, b, spec.path_tolerance, allowed)
        except MeshError as exc:
            raise ModelError(f"sub-meshes {la!r} and {lb!r}: {exc}") from None
        out.append((labels.index(la), labels.index(lb), (a, b), paths))
    return out


def build_point_to_point(mesh: Mesh, spec: FunctionalSpec, sampled: dict[str, int] | None, model: IpModel) -> IpModel:
    """At least one near-shortest path between sampled vertices of adjacent sub-meshes."""
    if mesh.partition is None:
        raise ModelError("the point-to-point constraint needs a mesh partition")
    if sampled is None:
        sampled = sample_partition_vertices(mesh, spec.partition_seed)
    E = model.meta["edge"]
    groups = []
    for ia, ib, (a, b), paths in candidate_paths(mesh, spec, sampled):
        if not paths:
            raise ModelError(f"no candidate path between sampled vertices {a} and {b}")
        pvars = []
        for x, path in enumerate(paths):
            pv = model.add_var(f"P_{ia}_{ib}_{x}")
            n = len(path.edges)
            model.add_range(
                f"p2p_{ia}_{ib}_{x}", [(pv, n)] + [(E[e], -1) for e in path.edges], 1 - n, 0, "path_link"
            )
            model.meta["defs"][pv] = ("and", [E[e] for e in path.edges], [])
            pvars.append(pv)
        model.add_row(f"p2pset_{ia}_{ib}", [(pv, 1) for pv in pvars], ">=", 1, "path_choice")
        groups.append({"pair": (ia, ib), "sampled": (a, b), "paths": [p.edges for p in paths], "vars": pvars})
    model.meta["samples"] = dict(sampled)
    model.meta["p2p"] = groups
    return model


def build_local_features(mesh: Mesh, spec: FunctionalSpec, model: IpModel) -> IpModel:
    """Dead-end, branch, zig-zag, proximity and T-junction families per policy."""
    meta = model.meta
    E = meta["edge"]
    defs = meta["defs"]
    terms = meta["terms"]
    sinks = set(meta.get("sinks", resolve_sinks(mesh, spec)))

    dead = spec.dead_end
    if dead.mode != "allowed":
        terms["dead_end"] = []
        for h in range(2 * mesh.n_edges):
            i, j = int(mesh.he_tail[h]), int(mesh.he_head[h])
            if j in sinks:
                continue
            x = h >> 1
            others = [e for e in mesh.vertex_edges[j] if e != x]
            nu = model.add_var(f"N_{i}_{j}")
            defs[nu] = ("or", [E[e] for e in others])
            n = len(others)
            if n == 0:
                model.fix(nu, 0)
            else:
                model.add_range(f"nu_{i}_{j}", [(E[e], 1) for e in others] + [(nu, -n)], 1 - n, 0, "nonempty")
            if dead.forbidden:
                model.add_row(f"deadend_{i}_{j}", [(E[x], 1), (nu, -1)], "<=", 0, "dead_end_ban")
            else:
                q = model.add_var(f"Q_{i}_{j}")
                defs[q] = ("and", [E[x]], [E[e] for e in others])
                model.add_row(f"deadend_{i}_{j}", [(E[x], 1), (nu, -1), (q, -1)], "<=", 0, "dead_end_count")
                terms["dead_end"].append(q)

    branch = spec.branch
    if branch.mode != "allowed":
        terms["branch"] = []
        for y in range(mesh.n_vertices):
            es = mesh.vertex_edges[y]
            if len(es) <= 2:
                continue
            if branch.forbidden:
                model.add_row(f"branch_{y}", [(E[e], 1) for e in es], "<=", 2, "branch_ban")
            else:
                b = model.add_var(f"B_{y}")
                defs[b] = ("atleast", [E[e] for e in es], 3)
                model.add_row(
                    f"branch_{y}", [(E[e], 1) for e in es] + [(b, -(len(es) - 2))], "<=", 2, "branch_count"
                )
                terms["branch"].append(b)

    meta["patterns"] = []
    for kind, prefix in (("zigzag", "ZZ"), ("proximity", "ZP")):
        policy = spec.feature(kind)
        if policy.mode == "allowed":
            continue
        terms[kind] = []
        for h, w, edges in enumerate_patterns(mesh, spec.patterns[kind]):
            i, j = int(mesh.he_tail[h]), int(mesh.he_head[h])
            n = len(edges)
            row_terms = [(E[e], 1) for e in edges]
            if policy.forbidden:
                model.add_row(f"{prefix.lower()}_{i}_{j}_{w}", row_terms, "<=", n - 1, f"{kind}_ban")
                meta["patterns"].append((kind, None, edges))
            else:
                z = model.add_var(f"{prefix}_{i}_{j}_{w}")
                defs[z] = ("and", [E[e] for e in edges], [])
                model.add_range(f"{prefix.lower()}_{i}_{j}_{w}", row_terms + [(z, -n)], 0, n - 1, kind)
                terms[kind].append(z)
                meta["patterns"].append((kind, z, edges))

    tj = spec.t_junction
    if tj.mode != "allowed":
        terms["t_junction"] = []
        for h in range(2 * mesh.n_edges):
            i, j = int(mesh.he_tail[h]), int(mesh.he_head[h])
            if mesh.degree(j) != 4:
                continue
            e0 = h >> 1
            rest = [e for e in mesh.vertex_edges[j] if e != e0]
            row_terms = [(E[e], 1) for e in rest] + [(E[e0], -1)]
            if tj.forbidden:
                model.add_row(f"tj_{i}_{j}", row_terms, "<=", 2, "t_junction_ban")
            else:
                t = model.add_var(f"T_{i}_{j}")
                defs[t] = ("and", [E[e] for e in rest], [E[e0]])
                model.add_range(f"tj_{i}_{j}", row_terms + [(t, -4)], -1, 2, "t_junction")
                terms["t_junction"].append(t)
    return model


def apply_user_fixings(mesh: Mesh, spec: FunctionalSpec, model: IpModel) -> IpModel:
    """Fix edge/vertex indicators from annotations, user fixings and forced routes."""
    meta = model.meta
    E = meta["edge"]
    active, inactive = edge_states(mesh, spec)
    for e in sorted(inactive):
        model.fix(E[e], 0)
    for e in sorted(active):
        model.fix(E[e], 1)
    V = meta.get("vertex")
    if V is not None:
        for y in sorted(set(mesh.obstacle_vertices) | set(spec.vertices_inactive)):
            model.fix(V[y], 0)
        for y in sorted(set(spec.vertices_active)):
            if y in mesh.obstacle_vertices or y in spec.vertices_inactive:
                raise ModelError(f"contradictory fixings: vertex {y} forced both active and inactive")
            model.fix(V[y], 1)
    routes = forced_route_paths(mesh, spec)
    for r, (edges, verts) in enumerate(routes):
        for y in verts[1:-1]:
            model.add_row(f"route{r}_{y}", [(E[e], 1) for e in mesh.vertex_edges[y]], "<=", 2, "route_branch")
    meta["forced_routes"] = [edges for edges, _ in routes]
    meta["fixed_active"] = sorted(active)
    meta["fixed_inactive"] = sorted(inactive)
    return model


def assemble_objective(mesh: Mesh, spec: FunctionalSpec, model: IpModel) -> IpModel:
    """Weighted length + distance + penalty objective."""
    meta = model.meta
    terms = meta["terms"]
    terms["length"] = list(meta["edge"])
    if spec.length_weight:
        for e, ev in enumerate(meta["edge"]):
            model.set_objective(ev, spec.length_weight * float(mesh.lengths[e]))
    if spec.distance_weight and "distance" in meta:
        for dv in meta["distance"]:
            model.set_objective(dv, spec.distance_weight)
    for name in ("dead_end", "branch", "zigzag", "proximity", "t_junction"):
        policy = spec.feature(name)
        if policy.penalized and policy.weight:
            for v in terms.get(name, ()):
                model.set_objective(v, policy.weight)
    return model


def objective_weights(spec: FunctionalSpec) -> dict[str, float]:
    weights = {"length": spec.length_weight, "distance": spec.distance_weight}
    for name in ("dead_end", "branch", "zigzag", "proximity", "t_junction"):
        policy = spec.feature(name)
        if policy.penalized:
            weights[name] = policy.weight
    return weights

