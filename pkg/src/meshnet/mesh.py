"""Polygonal mesh domain: half-edge connectivity, annotations and graph queries.

Edges are stored with ``u < v`` and sorted, so edge ids are canonical for a
given face list. Edge ``e`` owns half-edges ``2e`` (``u -> v``) and
``2e + 1`` (``v -> u``); ``twin(h) == h ^ 1``.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

FORMAT_NAME = "meshnet/mesh"
FORMAT_VERSION = 1


class MeshError(ValueError):
    """Raised when a mesh or one of its annotations is inconsistent."""


class MeshParseError(MeshError):
    """Raised when a mesh document cannot be parsed."""


@dataclass(frozen=True)
class Path:
    """A simple path given by its edge ids and the vertices it visits."""

    edges: tuple[int, ...]
    vertices: tuple[int, ...]

    def __post_init__(self):
        if len(self.edges) < 1 or len(self.vertices) != len(self.edges) + 1:
            raise MeshError("a path needs at least one edge")
        if len(set(self.vertices)) != len(self.vertices):
            raise MeshError("path repeats a vertex")

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def __len__(self):
        return len(self.edges)


def _signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Mesh:
    """Immutable 2D polygonal mesh with network-design annotations.

    Edge references in the annotation arguments may be edge ids or
    ``(u, v)`` vertex pairs.
    """

    def __init__(
        self,
        positions,
        faces: Sequence[Sequence[int]],
        *,
        sinks: Iterable[int] = (),
        obstacle_vertices: Iterable[int] = (),
        obstacle_edges: Iterable = (),
        obstacle_faces: Iterable[int] = (),
        partition: Mapping[str, Iterable[int]] | None = None,
        fixed_active: Iterable = (),
        fixed_inactive: Iterable = (),
        edge_parent: Sequence[int] | None = None,
        face_parent: Sequence[int] | None = None,
    ):
        pos = np.array(positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        self.positions = pos
        nv = len(pos)
        if nv == 0:
            raise MeshError("mesh has no vertices")

        oriented = []
        for f, face in enumerate(faces):
            face = [int(v) for v in face]
            if len(face) < 3:
                raise MeshError(f"face {f} has fewer than 3 vertices")
            if len(set(face)) != len(face):
                raise MeshError(f"face {f} repeats a vertex")
            for v in face:
                if not 0 <= v < nv:
                    raise MeshError(f"face {f} references vertex {v} out of range")
            area = _signed_area(pos[face])
            if abs(area) <= 1e-12:
                raise MeshError(f"face {f} is degenerate")
            if area < 0:
                face = face[::-1]
            oriented.append(tuple(face))
        if not oriented:
            raise MeshError("mesh has no faces")
        self.faces: tuple[tuple[int, ...], ...] = tuple(oriented)

        pairs = set()
        for face in self.faces:
            for k, u in enumerate(face):
                v = face[(k + 1) % len(face)]
                pairs.add((min(u, v), max(u, v)))
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(pairs))
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        ne = len(self.edges)

        ends = np.array(self.edges, dtype=int)
        lengths = np.linalg.norm(pos[ends[:, 1]] - pos[ends[:, 0]], axis=1)
        lengths.setflags(write=False)
        self.lengths = lengths

        tail = np.empty(2 * ne, dtype=int)
        head = np.empty(2 * ne, dtype=int)
        tail[0::2], head[0::2] = ends[:, 0], ends[:, 1]
        tail[1::2], head[1::2] = ends[:, 1], ends[:, 0]
        self.he_tail, self.he_head = tail, head

        he_face = [-1] * (2 * ne)
        he_next = [-1] * (2 * ne)
        he_prev = [-1] * (2 * ne)
        edge_faces: list[list[int]] = [[] for _ in range(ne)]
        for f, face in enumerate(self.faces):
            hs = [self.half_edge(face[k], face[(k + 1) % len(face)]) for k in range(len(face))]
            for k, h in enumerate(hs):
                if he_face[h] != -1:
                    raise MeshError(
                        f"half-edge {face[k]}->{face[(k + 1) % len(face)]} is used by two faces"
                    )
                he_face[h] = f
                he_next[h] = hs[(k + 1) % len(hs)]
                he_prev[h] = hs[k - 1]
                edge_faces[h >> 1].append(f)
        self.he_face = tuple(he_face)
        self.he_next = tuple(he_next)
        self.he_prev = tuple(he_prev)
        self.edge_faces = tuple(tuple(sorted(fs)) for fs in edge_faces)

        vertex_edges: list[list[int]] = [[] for _ in range(nv)]
        for e, (u, v) in enumerate(self.edges):
            vertex_edges[u].append(e)
            vertex_edges[v].append(e)
        self.vertex_edges = tuple(tuple(es) for es in vertex_edges)
        self.neighbors = tuple(
            tuple(sorted(self.other_end(e, v) for e in es)) for v, es in enumerate(vertex_edges)
        )
        self.boundary_edges = frozenset(e for e in range(ne) if len(self.edge_faces[e]) == 1)
        self.boundary_vertices = frozenset(v for e in self.boundary_edges for v in self.edges[e])
        self.delta_all = float(2.0 * lengths.sum())

        self._check_connected()

        self.sinks = frozenset(int(v) for v in sinks)
        self.obstacle_vertices = frozenset(int(v) for v in obstacle_vertices)
        self.obstacle_edges = frozenset(self._resolve_edges(obstacle_edges))
        self.obstacle_faces = frozenset(int(f) for f in obstacle_faces)
        self.fixed_active = frozenset(self._resolve_edges(fixed_active))
        self.fixed_inactive = frozenset(self._resolve_edges(fixed_inactive))
        for name, ids, limit in (
            ("sink", self.sinks, nv),
            ("obstacle vertex", self.obstacle_vertices, nv),
            ("obstacle face", self.obstacle_faces, len(self.faces)),
        ):
            bad = [i for i in ids if not 0 <= i < limit]
            if bad:
                raise MeshError(f"{name} id {bad[0]} out of range")
        both = self.fixed_active & self.fixed_inactive
        if both:
            raise MeshError(f"edge {self.edges[min(both)]} is both fixed active and fixed inactive")

        self.partition: dict[str, frozenset[int]] | None = None
        self.face_label: tuple[str, ...] | None = None
        if partition is not None:
            self._set_partition(partition)

        self.edge_parent = tuple(edge_parent) if edge_parent is not None else None
        self.face_parent = tuple(face_parent) if face_parent is not None else None

    # -- basic queries -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self.edge_index[(min(u, v), max(u, v))]
        except KeyError:
            raise MeshError(f"no edge between {u} and {v}") from None

    def half_edge(self, i: int, j: int) -> int:
        e = self.edge_id(i, j)
        return 2 * e + (0 if i < j else 1)

    @staticmethod
    def twin(h: int) -> int:
        return h ^ 1

    def other_end(self, e: int, v: int) -> int:
        a, b = self.edges[e]
        return b if v == a else a

    def degree(self, v: int) -> int:
        return len(self.vertex_edges[v])

    def he_length(self, h: int) -> float:
        return float(self.lengths[h >> 1])

    def successors(self, h: int) -> list[int]:
        """Half-edges leaving ``head(h)`` other than ``twin(h)``."""
        i, j = int(self.he_tail[h]), int(self.he_head[h])
        return [self.half_edge(j, k) for k in self.neighbors[j] if k != i]

    def face_edges(self, f: int) -> tuple[int, ...]:
        face = self.faces[f]
        return tuple(self.edge_id(face[k], face[(k + 1) % len(face)]) for k in range(len(face)))

    def face_half_edges(self, f: int) -> tuple[int, ...]:
        face = self.faces[f]
        return tuple(self.half_edge(face[k], face[(k + 1) % len(face)]) for k in range(len(face)))

    def face_centroid(self, f: int) -> np.ndarray:
        return self.positions[list(self.faces[f])].mean(axis=0)

    def face_neighbors(self, f: int) -> list[int]:
        out = []
        for e in self.face_edges(f):
            out.extend(g for g in self.edge_faces[e] if g != f)
        return sorted(set(out))

    # -- validation helpers ----------------------------------------------

    def _resolve_edges(self, refs: Iterable) -> list[int]:
        out = []
        for ref in refs:
            if isinstance(ref, (int, np.integer)):
                e = int(ref)
                if not 0 <= e < self.n_edges:
                    raise MeshError(f"edge id {e} out of range")
            else:
                u, v = ref
                e = self.edge_id(int(u), int(v))
            out.append(e)
        return out

    def _check_connected(self):
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != self.n_vertices:
            missing = min(set(range(self.n_vertices)) - seen)
            raise MeshError(f"mesh is disconnected (vertex {missing} unreachable)")

    def _set_partition(self, partition: Mapping[str, Iterable[int]]):
        labels: list[str | None] = [None] * self.n_faces
        groups = {}
        for label, faces in partition.items():
            label = str(label)
            fs = frozenset(int(f) for f in faces)
            if not fs:
                raise MeshError(f"partition label {label!r} is empty")
            for f in fs:
                if not 0 <= f < self.n_faces:
                    raise MeshError(f"partition face {f} out of range")
                if labels[f] is not None:
                    raise MeshError(f"face {f} appears in two partition labels")
                labels[f] = label
            groups[label] = fs
        if any(lab is None for lab in labels):
            raise MeshError(f"partition does not cover face {labels.index(None)}")
        for label, fs in groups.items():
            start = min(fs)
            seen = {start}
            stack = [start]
            while stack:
                f = stack.pop()
                for g in self.face_neighbors(f):
                    if g in fs and g not in seen:
                        seen.add(g)
                        stack.append(g)
            if seen != fs:
                raise MeshError(f"partition label {label!r} is not edge-connected")
        self.partition = {k: groups[k] for k in sorted(groups)}
        self.face_label = tuple(labels)

    # -- derived meshes --------------------------------------------------

    def replace(self, **changes) -> "Mesh":
        """A copy of this mesh with some annotations replaced."""
        kwargs = dict(
            sinks=self.sinks,
            obstacle_vertices=self.obstacle_vertices,
            obstacle_edges=self.obstacle_edges,
            obstacle_faces=self.obstacle_faces,
            partition=self.partition,
            fixed_active=self.fixed_active,
            fixed_inactive=self.fixed_inactive,
            edge_parent=self.edge_parent,
            face_parent=self.face_parent,
        )
        positions = changes.pop("positions", self.positions)
        unknown = set(changes) - set(kwargs)
        if unknown:
            raise TypeError(f"unknown mesh fields: {sorted(unknown)}")
        kwargs.update(changes)
        return Mesh(positions, self.faces, **kwargs)

    def __repr__(self):
        return f"Mesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"


# -- construction helpers ------------------------------------------------


def grid_mesh(nx: int, ny: int, spacing: float = 1.0, **annotations) -> Mesh:
    """Regular ``nx`` by ``ny`` quad grid; vertex ``(x, y)`` has id ``y * (nx + 1) + x``."""
    positions = [(x * spacing, y * spacing) for y in range(ny + 1) for x in range(nx + 1)]
    faces = []
    for y in range(ny):
        for x in range(nx):
            v = y * (nx + 1) + x
            faces.append((v, v + 1, v + nx + 2, v + nx + 1))
    return Mesh(positions, faces, **annotations)


def load_mesh(document: str) -> Mesh:
    """Parse a mesh document (JSON text) into a :class:`Mesh`."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MeshParseError(f"mesh document is not valid JSON: {exc}") from exc
    return mesh_from_dict(doc)


def mesh_from_dict(doc: dict) -> Mesh:
    if not isinstance(doc, dict):
        raise MeshParseError("mesh document must be an object")
    # solution documents embed the mesh sections, so any meshnet/* format is accepted
    if not str(doc.get("format", FORMAT_NAME)).startswith("meshnet/"):
        raise MeshParseError(f"unexpected document format {doc.get('format')!r}")
    if doc.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise MeshParseError(f"unsupported mesh document version {doc.get('version')!r}")
    try:
        rows = doc["vertices"]
        faces = doc["faces"]
    except KeyError as exc:
        raise MeshParseError(f"mesh document lacks section {exc.args[0]!r}") from None
    try:
        rows = sorted((int(r[0]), float(r[1]), float(r[2])) for r in rows)
    except (TypeError, ValueError, IndexError) as exc:
        raise MeshParseError(f"malformed vertex row: {exc}") from None
    if [r[0] for r in rows] != list(range(len(rows))):
        raise MeshError("vertex ids must be 0..N-1 without gaps")
    obstacles = doc.get("obstacles") or {}
    unknown = set(obstacles) - {"vertices", "edges", "faces"}
    if unknown:
        raise MeshParseError(f"unknown obstacle sections: {sorted(unknown)}")
    try:
        return Mesh(
            [(x, y) for _, x, y in rows],
            faces,
            sinks=doc.get("sinks") or (),
            obstacle_vertices=obstacles.get("vertices") or (),
            obstacle_edges=[tuple(p) for p in obstacles.get("edges") or ()],
            obstacle_faces=obstacles.get("faces") or (),
            partition=doc.get("partition"),
            fixed_active=[tuple(p) for p in doc.get("fixed_active") or ()],
            fixed_inactive=[tuple(p) for p in doc.get("fixed_inactive") or ()],
        )
    except TypeError as exc:
        raise MeshParseError(f"malformed mesh document: {exc}") from None


def _pairs(mesh: Mesh, edge_ids) -> list[list[int]]:
    return [list(mesh.edges[e]) for e in sorted(edge_ids)]


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "vertices": [[i, float(x), float(y)] for i, (x, y) in enumerate(mesh.positions)],
        "faces": [list(f) for f in mesh.faces],
        "sinks": sorted(mesh.sinks),
        "obstacles": {
            "vertices": sorted(mesh.obstacle_vertices),
            "edges": _pairs(mesh, mesh.obstacle_edges),
            "faces": sorted(mesh.obstacle_faces),
        },
        "partition": (
            {k: sorted(v) for k, v in mesh.partition.items()} if mesh.partition is not None else None
        ),
        "fixed_active": _pairs(mesh, mesh.fixed_active),
        "fixed_inactive": _pairs(mesh, mesh.fixed_inactive),
    }


def dump_document(doc: dict) -> str:
    """Canonical, line-oriented JSON: one list row per line, fixed key order."""
    lines = ["{"]
    items = list(doc.items())
    for n, (key, value) in enumerate(items):
        sep = "," if n < len(items) - 1 else ""
        if isinstance(value, list) and value and all(isinstance(r, (list, dict)) for r in value):
            lines.append(f"  {json.dumps(key)}: [")
            for k, row in enumerate(value):
                comma = "," if k < len(value) - 1 else ""
                lines.append(f"    {json.dumps(row, sort_keys=True)}{comma}")
            lines.append(f"  ]{sep}")
        elif isinstance(value, dict) and value and any(isinstance(v, list) for v in value.values()):
            lines.append(f"  {json.dumps(key)}: {{")
            sub = list(value.items())
            for k, (skey, sval) in enumerate(sub):
                comma = "," if k < len(sub) - 1 else ""
                lines.append(f"    {json.dumps(skey)}: {json.dumps(sval, sort_keys=True)}{comma}")
            lines.append(f"  }}{sep}")
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value, sort_keys=True)}{sep}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_mesh(mesh: Mesh) -> str:
    return dump_document(mesh_to_dict(mesh))


# -- subdivision ---------------------------------------------------------


def catmull_clark_subdivide(mesh: Mesh) -> Mesh:
    """One Catmull-Clark topology step with no vertex repositioning.

    New vertices: original ids first, then one midpoint per edge (id
    ``V + e``), then one centroid per face (id ``V + E + f``). Each n-gon
    becomes n quads. Children of an edge inherit its fixed and obstacle flags.
    """
    nv, ne = mesh.n_vertices, mesh.n_edges
    mids = 0.5 * (mesh.positions[[u for u, _ in mesh.edges]] + mesh.positions[[v for _, v in mesh.edges]])
    cents = np.array([mesh.face_centroid(f) for f in range(mesh.n_faces)])
    positions = np.vstack([mesh.positions, mids, cents])

    faces = []
    face_parent = []
    for f, face in enumerate(mesh.faces):
        c = nv + ne + f
        n = len(face)
        for k in range(n):
            v = face[k]
            m_next = nv + mesh.edge_id(v, face[(k + 1) % n])
            m_prev = nv + mesh.edge_id(face[k - 1], v)
            faces.append((v, m_next, c, m_prev))
            face_parent.append(f)

    def children(e: int) -> list[tuple[int, int]]:
        u, v = mesh.edges[e]
        return [(u, nv + e), (v, nv + e)]

    def expand(edge_ids) -> list[tuple[int, int]]:
        return [pair for e in sorted(edge_ids) for pair in children(e)]

    partition = None
    if mesh.partition is not None:
        partition = {
            label: [k for k, p in enumerate(face_parent) if p in faces_]
            for label, faces_ in mesh.partition.items()
        }
    child = Mesh(
        positions,
        faces,
        sinks=mesh.sinks,
        obstacle_vertices=mesh.obstacle_vertices,
        obstacle_edges=expand(mesh.obstacle_edges),
        obstacle_faces=[k for k, p in enumerate(face_parent) if p in mesh.obstacle_faces],
        partition=partition,
        fixed_active=expand(mesh.fixed_active),
        fixed_inactive=expand(mesh.fixed_inactive),
        face_parent=face_parent,
    )
    parent = [-1] * child.n_edges
    for e in range(ne):
        for u, w in children(e):
            parent[child.edge_id(u, w)] = e
    child.edge_parent = tuple(parent)
    return child


def map_edges_to_children(parent_mesh: Mesh, child_mesh: Mesh, edge_ids: Iterable[int]) -> set[int]:
    """Child edges of the given parent edges after :func:`catmull_clark_subdivide`."""
    if child_mesh.edge_parent is None:
        raise MeshError("child mesh carries no subdivision lineage")
    wanted = set(edge_ids)
    return {e for e, p in enumerate(child_mesh.edge_parent) if p in wanted}


# -- graph queries -------------------------------------------------------


def hop_distances(mesh: Mesh, source: int, allowed_edges: set[int] | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for e in mesh.vertex_edges[v]:
            if allowed_edges is not None and e not in allowed_edges:
                continue
            w = mesh.other_end(e, v)
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def coverage_neighborhood(mesh: Mesh, vertex: int, radius: int) -> frozenset[int]:
    """All vertices within ``radius`` hops of ``vertex`` in the edge graph."""
    if not 0 <= vertex < mesh.n_vertices:
        raise MeshError(f"vertex {vertex} out of range")
    if radius < 0:
        raise MeshError("coverage radius must be nonnegative")
    dist = {vertex: 0}
    frontier = [vertex]
    for step in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for w in mesh.neighbors[v]:
                if w not in dist:
                    dist[w] = step
                    nxt.append(w)
        frontier = nxt
    return frozenset(dist)


def enumerate_near_shortest_paths(
    mesh: Mesh, a: int, b: int, tol: int, allowed_edges: Iterable[int] | None = None
) -> list[Path]:
    """Every simple a-b path whose hop count is at most shortest + ``tol``.

    Paths are sorted lexicographically by their edge-id sequence.
    """
    if a == b:
        raise MeshError("path endpoints must differ")
    if tol < 0:
        raise MeshError("path tolerance must be nonnegative")
    allowed = set(allowed_edges) if allowed_edges is not None else None
    to_b = hop_distances(mesh, b, allowed)
    if a not in to_b:
        raise MeshError(f"vertices {a} and {b} are not connected")
    bound = to_b[a] + tol
    out: list[Path] = []
    verts = [a]
    edges: list[int] = []
    on_path = {a}

    def extend(v: int):
        if v == b:
            out.append(Path(tuple(edges), tuple(verts)))
            return
        for e in mesh.vertex_edges[v]:
            if allowed is not None and e not in allowed:
                continue
            w = mesh.other_end(e, v)
            if w in on_path or w not in to_b:
                continue
            if len(edges) + 1 + to_b[w] > bound:
                continue
            verts.append(w)
            edges.append(e)
            on_path.add(w)
            extend(w)
            on_path.discard(w)
            edges.pop()
            verts.pop()

    extend(a)
    out.sort(key=lambda p: p.edges)
    return out


def adjacent_partition_pairs(mesh: Mesh) -> list[tuple[str, str]]:
    """Label pairs of sub-meshes sharing at least one edge, sorted."""
    if mesh.face_label is None:
        raise MeshError("mesh has no partition")
    pairs = set()
    for fs in mesh.edge_faces:
        if len(fs) == 2:
            la, lb = mesh.face_label[fs[0]], mesh.face_label[fs[1]]
            if la != lb:
                pairs.add((min(la, lb), max(la, lb)))
    return sorted(pairs)


def sample_partition_vertices(mesh: Mesh, seed: int) -> dict[str, int]:
    """One vertex per sub-mesh, preferring vertices untouched by other sub-meshes."""
    if mesh.partition is None or mesh.face_label is None:
        raise MeshError("mesh has no partition")
    vertex_labels: list[set[str]] = [set() for _ in range(mesh.n_vertices)]
    for f, face in enumerate(mesh.faces):
        for v in face:
            vertex_labels[v].add(mesh.face_label[f])
    rng = random.Random(seed)
    out = {}
    for label, faces in mesh.partition.items():
        verts = sorted({v for f in faces for v in mesh.faces[f]})
        interior = [v for v in verts if vertex_labels[v] == {label}]
        out[label] = rng.choice(interior or verts)
    return out
