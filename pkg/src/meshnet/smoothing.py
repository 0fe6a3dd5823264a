"""Snake (active contour) smoothing of a solved network.

Discretisation, with the snake parameter equal to the point index:

* first derivative: central differences inside, one-sided at open ends;
* second derivative: ``u[i-1] - 2 u[i] + u[i+1]`` inside; open ends reuse
  the stencil of their interior neighbour;
* closed snakes wrap around;
* quadrature: trapezoid weights (1/2 at open ends, 1 elsewhere).

The energy ``a |D1 u|^2 + b |D2 u|^2 + c |u - u0|^2`` (each weighted by the
quadrature) is quadratic in ``u``, so its gradient is exact:
``2 (a D1'WD1 + b D2'WD2 + c W) u - 2 c W u0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mesh import Mesh

TOP_WEIGHTS = (1.0, 4.0, 1.0)
BOTTOM_WEIGHTS = (1.0, 1.0, 4.0)


class SmoothingError(ValueError):
    pass


@dataclass(frozen=True)
class Snake:
    points: np.ndarray
    original: np.ndarray
    closed: bool = False
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    # one hashable key per point; equal keys across snakes are the same point
    keys: tuple = ()

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        orig = np.array(self.original, dtype=float).reshape(-1, 2)
        if pts.shape != orig.shape:
            raise SmoothingError("points and original positions differ in length")
        n = len(pts)
        if n < (3 if self.closed else 2):
            raise SmoothingError("a snake needs 2 points (open) or 3 points (closed)")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise SmoothingError("snake weights must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "original", orig)
        keys = tuple(self.keys) if self.keys else tuple(range(n))
        if len(keys) != n:
            raise SmoothingError("one key per point is required")
        object.__setattr__(self, "keys", keys)

    @property
    def n(self) -> int:
        return len(self.points)

    def with_points(self, points) -> "Snake":
        return replace(self, points=np.array(points, dtype=float))


def make_snake(points, closed=False, weights=(1.0, 1.0, 1.0), keys=()) -> Snake:
    pts = np.array(points, dtype=float)
    a, b, c = weights
    return Snake(pts, pts.copy(), closed, a, b, c, tuple(keys))


def _operators(n: int, closed: bool):
    d1 = np.zeros((n, n))
    d2 = np.zeros((n, n))
    w = np.ones(n)
    if closed:
        for i in range(n):
            d1[i, (i + 1) % n] += 0.5
            d1[i, (i - 1) % n] -= 0.5
            d2[i, (i - 1) % n] += 1
            d2[i, i] -= 2
            d2[i, (i + 1) % n] += 1
        return d1, d2, w
    w[0] = w[-1] = 0.5
    d1[0, 0], d1[0, 1] = -1, 1
    d1[-1, -2], d1[-1, -1] = -1, 1
    for i in range(1, n - 1):
        d1[i, i - 1], d1[i, i + 1] = -0.5, 0.5
    if n >= 3:
        for i in range(n):
            c = min(max(i, 1), n - 2)
            d2[i, c - 1] += 1
            d2[i, c] -= 2
            d2[i, c + 1] += 1
    return d1, d2, w


_OPS: dict[tuple[int, bool], tuple] = {}


def _hessian(snake: Snake):
    key = (snake.n, snake.closed)
    if key not in _OPS:
        d1, d2, w = _operators(*key)
        W = np.diag(w)
        _OPS[key] = (d1, d2, w, d1.T @ W @ d1, d2.T @ W @ d2, W)
    return _OPS[key]


def snake_energy(snake: Snake) -> float:
    d1, d2, w, _, _, _ = _hessian(snake)
    u = snake.points
    t = np.sum(w * np.sum((d1 @ u) ** 2, axis=1))
    s = np.sum(w * np.sum((d2 @ u) ** 2, axis=1))
    i = np.sum(w * np.sum((u - snake.original) ** 2, axis=1))
    return float(snake.alpha * t + snake.beta * s + snake.gamma * i)


def snake_energy_terms(snake: Snake) -> dict[str, float]:
    d1, d2, w, _, _, _ = _hessian(snake)
    u = snake.points
    return {
        "tension": float(np.sum(w * np.sum((d1 @ u) ** 2, axis=1))),
        "stiffness": float(np.sum(w * np.sum((d2 @ u) ** 2, axis=1))),
        "inertia": float(np.sum(w * np.sum((u - snake.original) ** 2, axis=1))),
    }


def snake_gradient(snake: Snake, pin_ends: bool = True) -> np.ndarray:
    """Exact gradient of :func:`snake_energy`; open-snake ends get zero when pinned."""
    g = _raw_gradient(snake)
    if pin_ends and not snake.closed:
        g[0] = 0.0
        g[-1] = 0.0
    return g


def _raw_gradient(snake: Snake) -> np.ndarray:
    _, _, _, t, s, W = _hessian(snake)
    u = snake.points
    g = 2.0 * (snake.alpha * t + snake.beta * s + snake.gamma * W) @ u
    g -= 2.0 * snake.gamma * (W @ snake.original)
    return g


# -- descent -----------------------------------------------------------------


@dataclass(frozen=True)
class StepPolicy:
    tolerance: float = 1e-6
    max_iterations: int = 20000
    initial_step: float = 0.25
    shrink: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-14


@dataclass
class SmoothResult:
    snakes: list[Snake]
    iterations: int
    energies: list[float] = field(default_factory=list)
    converged: bool = True


def _pinned_keys(snakes: list[Snake], extra=()) -> set:
    pinned = set(extra)
    for s in snakes:
        if not s.closed:
            pinned.add(s.keys[0])
            pinned.add(s.keys[-1])
    return pinned


def smooth_with_history(snakes: list[Snake], policy: StepPolicy | None = None, pinned=()) -> SmoothResult:
    """Backtracking gradient descent on the summed energy of ``snakes``.

    Points with equal keys are one shared point: their gradient is the
    average over the snakes containing them. Ends of open snakes and keys in
    ``pinned`` never move.
    """
    policy = policy or StepPolicy()
    snakes = list(snakes)
    if not snakes:
        return SmoothResult([], 0)
    order: dict = {}
    for s in snakes:
        for k in s.keys:
            order.setdefault(k, len(order))
    m = len(order)
    pos = np.zeros((m, 2))
    counts = np.zeros(m)
    idx = []
    for s in snakes:
        ii = np.array([order[k] for k in s.keys])
        pos[ii] = s.points
        np.add.at(counts, ii, 1.0)
        idx.append(ii)
    frozen = np.zeros(m, dtype=bool)
    for k in _pinned_keys(snakes, pinned):
        if k in order:
            frozen[order[k]] = True

    def energy(p):
        return sum(snake_energy(s.with_points(p[ii])) for s, ii in zip(snakes, idx))

    def gradient(p):
        g = np.zeros((m, 2))
        for s, ii in zip(snakes, idx):
            np.add.at(g, ii, _raw_gradient(s.with_points(p[ii])))
        g[frozen] = 0.0
        return g

    e = energy(pos)
    energies = [e]
    step = policy.initial_step
    it = 0
    converged = False
    while it < policy.max_iterations:
        g = gradient(pos)
        d = -g / counts[:, None]
        slope = float(np.sum(g * d))
        if not np.any(d) or slope >= 0:
            converged = True
            break
        t = step
        while True:
            trial = pos + t * d
            et = energy(trial)
            if et <= e + policy.armijo * t * slope:
                break
            t *= policy.shrink
            if t < policy.min_step:
                break
        if t < policy.min_step:
            converged = True
            break
        it += 1
        moved = t * float(np.max(np.linalg.norm(d, axis=1)))
        pos, e = trial, et
        energies.append(e)
        step = min(policy.initial_step * 16, t * 2)
        if moved < policy.tolerance:
            converged = True
            break
    out = [s.with_points(pos[ii]) for s, ii in zip(snakes, idx)]
    return SmoothResult(out, it, energies, converged)


def smooth(snakes: list[Snake], policy: StepPolicy | None = None, pinned=()) -> list[Snake]:
    return smooth_with_history(snakes, policy, pinned).snakes


# -- network decomposition ---------------------------------------------------


def _angle(mesh_pos, v, a, b) -> float:
    p = mesh_pos[v]
    da, db = mesh_pos[a] - p, mesh_pos[b] - p
    c = float(np.dot(da, db) / (np.linalg.norm(da) * np.linalg.norm(db)))
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def decompose_network(mesh: Mesh, active_edges, positions=None, min_angle: float = 135.0):
    """Edge-disjoint vertex chains covering the active edges, as ``(vertices, closed)``.

    Chains run through valence-2 vertices and through junctions where two
    incident edges are nearly straight (angle at least ``min_angle``).
    """
    pos = mesh.positions if positions is None else np.asarray(positions)
    active = sorted(set(active_edges))
    if not active:
        raise SmoothingError("the network is empty")
    inc: dict[int, list[int]] = {}
    for e in active:
        for v in mesh.edges[e]:
            inc.setdefault(v, []).append(e)
    deg = {v: len(es) for v, es in inc.items()}
    partner: dict[tuple[int, int], int] = {}
    for v in sorted(inc):
        if deg[v] < 3:
            continue
        cands = []
        es = inc[v]
        for x in range(len(es)):
            for y in range(x + 1, len(es)):
                a = _angle(pos, v, mesh.other_end(es[x], v), mesh.other_end(es[y], v))
                if a >= min_angle:
                    cands.append((-round(a, 9), es[x], es[y]))
        cands.sort()
        taken = set()
        for _, e1, e2 in cands:
            if e1 in taken or e2 in taken:
                continue
            taken.update((e1, e2))
            partner[(v, e1)] = e2
            partner[(v, e2)] = e1

    used = set()

    def next_edge(v, e):
        if deg[v] == 2:
            return inc[v][0] if inc[v][1] == e else inc[v][1]
        return partner.get((v, e))

    def trace(v, e):
        verts = [v]
        while True:
            used.add(e)
            w = mesh.other_end(e, v)
            verts.append(w)
            nxt = next_edge(w, e)
            if nxt is None or nxt in used:
                return verts
            v, e = w, nxt

    chains = []
    for v in sorted(inc):
        if deg[v] == 2:
            continue
        for e in sorted(inc[v]):
            if e in used or (v, e) in partner:
                continue
            verts = trace(v, e)
            if verts[0] == verts[-1]:
                chains.append((tuple(verts[:-1]), True))
            else:
                chains.append((tuple(verts), False))
    for e in active:
        if e in used:
            continue
        # a loop made of valence-2 vertices and straight junction crossings
        verts = trace(mesh.edges[e][0], e)
        if verts[0] == verts[-1]:
            cyc = verts[:-1]
            junctions = [x for x in cyc if deg[x] != 2]
            anchor = min(junctions) if junctions else min(cyc)
            k = cyc.index(anchor)
            cyc = cyc[k:] + cyc[:k]
            chains.append((tuple(cyc), True))
        else:
            chains.append((tuple(verts), False))
    return chains


def subdivide_chain(points: np.ndarray, closed: bool, k: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    for _ in range(k):
        if closed:
            nxt = np.roll(pts, -1, axis=0)
        else:
            nxt = pts[1:]
        mids = 0.5 * ((pts if closed else pts[:-1]) + nxt)
        out = np.empty((len(pts) + len(mids), 2))
        out[0::2] = pts
        out[1::2] = mids
        pts = out
    return pts


def extract_snakes(
    mesh: Mesh,
    network,
    weights=TOP_WEIGHTS,
    subdivisions: int = 2,
    positions=None,
) -> list[Snake]:
    """Snakes covering the network, each uniformly subdivided ``subdivisions`` times.

    ``network`` is a solution or an iterable of active edge ids. Mesh
    vertices keep their id as key, so junctions are shared between snakes;
    inserted points get ``("s", snake, index)`` keys.
    """
    active_edges = getattr(network, "active_edges", network)
    pos = mesh.positions if positions is None else np.asarray(positions, dtype=float)
    out = []
    for s, (verts, closed) in enumerate(decompose_network(mesh, active_edges, pos)):
        pts = subdivide_chain(pos[list(verts)], closed, subdivisions)
        step = 2**subdivisions
        keys = []
        for i in range(len(pts)):
            keys.append(verts[i // step] if i % step == 0 else ("s", s, i))
        a, b, c = weights
        snake = Snake(pts, pts.copy(), closed, a, b, c, tuple(keys))
        out.append(snake)
    return out


def closed_anchor_keys(snakes: list[Snake]) -> set:
    """First point of every closed snake, pinned so loops stay attached."""
    return {s.keys[0] for s in snakes if s.closed}


def snap_right_angles(snakes: list[Snake], junctions, threshold: float = 15.0) -> list[Snake]:
    """Rotate the first free point next to each junction onto a multiple of 90 degrees.

    Directions within ``threshold`` degrees of a right angle to the
    junction's reference direction (its lowest-keyed neighbour) are snapped;
    distances to the junction are kept.
    """
    snakes = list(snakes)
    pos = {}
    for s in snakes:
        for k, p in zip(s.keys, s.points):
            pos[k] = p.copy()
    pinned = _pinned_keys(snakes) | closed_anchor_keys(snakes)
    for j in sorted(junctions, key=repr):
        if j not in pos:
            continue
        nbrs = set()
        for s in snakes:
            n = s.n
            for i, k in enumerate(s.keys):
                if k != j:
                    continue
                for d in (-1, 1):
                    if s.closed or 0 <= i + d < n:
                        nbrs.add(s.keys[(i + d) % n])
        nbrs = sorted(nbrs, key=repr)
        if len(nbrs) < 2:
            continue
        c = pos[j]
        ref = pos[nbrs[0]] - c
        base = math.atan2(ref[1], ref[0])
        for k in nbrs[1:]:
            if k in pinned:
                continue
            v = pos[k] - c
            ang = math.degrees(math.atan2(v[1], v[0]) - base) % 360.0
            target = round(ang / 90.0) * 90.0
            if 0 < abs(ang - target) <= threshold:
                r = float(np.linalg.norm(v))
                t = base + math.radians(target)
                pos[k] = c + r * np.array([math.cos(t), math.sin(t)])
    return [s.with_points(np.array([pos[k] for k in s.keys])) for s in snakes]


def level_weights(level: int, n_levels: int) -> tuple[float, float, float]:
    """Interpolate the top-level and bottom-level weights for ``level`` (0-based)."""
    if n_levels <= 1:
        return TOP_WEIGHTS
    t = level / (n_levels - 1)
    return tuple(float((1 - t) * a + t * b) for a, b in zip(TOP_WEIGHTS, BOTTOM_WEIGHTS))
