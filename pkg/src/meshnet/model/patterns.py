"""Local edge configurations (zig-zags, near-parallel edges) as half-edge walks.

A walk starts on a half-edge ``h`` and applies steps:

* ``L`` -- turn left: the next half-edge of the face on the left.
* ``R`` -- turn right: the mirror of ``L`` through the face on the right.
* ``P`` -- jump to the opposite half-edge of the (quad) face on the left.

The configuration is the set of edges visited, including ``h``'s edge.
"""

from __future__ import annotations

from ..mesh import Mesh


def left_turn(mesh: Mesh, h: int) -> int:
    return mesh.he_next[h]


def right_turn(mesh: Mesh, h: int) -> int:
    p = mesh.he_prev[h ^ 1]
    return -1 if p < 0 else p ^ 1


def opposite(mesh: Mesh, h: int) -> int:
    f = mesh.he_face[h]
    if f < 0 or len(mesh.faces[f]) != 4:
        return -1
    return mesh.he_next[mesh.he_next[h]]


_STEPS = {"L": left_turn, "R": right_turn, "P": opposite}


def walk_edges(mesh: Mesh, h: int, walk) -> tuple[int, ...] | None:
    """Edge ids visited by ``walk`` from ``h``; ``None`` where the walk leaves the mesh."""
    cur = h
    edges = [h >> 1]
    for step in walk:
        cur = _STEPS[step](mesh, cur)
        if cur < 0:
            return None
        edges.append(cur >> 1)
    if len(set(edges)) != len(edges):
        return None
    return tuple(edges)


def enumerate_patterns(mesh: Mesh, walks) -> list[tuple[int, int, tuple[int, ...]]]:
    """Distinct configurations as ``(half_edge, walk_index, edges)``.

    Configurations with the same edge set are reported once, under the
    first half-edge (in id order) that generates them.
    """
    seen = set()
    out = []
    for h in range(2 * mesh.n_edges):
        for w, walk in enumerate(walks):
            edges = walk_edges(mesh, h, walk)
            if edges is None:
                continue
            key = frozenset(edges)
            if key in seen:
                continue
            seen.add(key)
            out.append((h, w, edges))
    return out
