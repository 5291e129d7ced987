"""Weighted graphs, vertex measure, distances, balls and domains.

All objects here are immutable after construction. Arrays exposed as
attributes are marked read-only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graph input; carries the offending index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with symmetric positive edge weights.

    Use :func:`build_graph` rather than calling the constructor directly.

    Attributes
    ----------
    vertex_count : int
    heads, tails : ndarray of int
        Endpoints of each undirected edge, ``heads[e] < tails[e]``.
    weights : ndarray of float
        Edge weight for each undirected edge.
    measure : ndarray of float
        ``psi(x) = sum_{y ~ x} w_xy``.
    connected : bool
    """

    vertex_count: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    measure: np.ndarray = field(repr=False)
    connected: bool = True

    @property
    def n(self):
        return self.vertex_count

    @property
    def edge_count(self):
        return len(self.weights)

    @cached_property
    def arcs(self):
        """Directed copies of every edge: ``(src, dst, w)`` of length 2|E|."""
        src = _frozen(np.concatenate([self.heads, self.tails]), int)
        dst = _frozen(np.concatenate([self.tails, self.heads]), int)
        w = _frozen(np.concatenate([self.weights, self.weights]))
        return src, dst, w

    @cached_property
    def adjacency(self):
        """Dense symmetric weight matrix."""
        W = np.zeros((self.n, self.n))
        W[self.heads, self.tails] = self.weights
        W[self.tails, self.heads] = self.weights
        W.setflags(write=False)
        return W

    @cached_property
    def neighbors(self):
        nbrs = [[] for _ in range(self.n)]
        for a, b in zip(self.heads.tolist(), self.tails.tolist()):
            nbrs[a].append(b)
            nbrs[b].append(a)
        return tuple(tuple(sorted(x)) for x in nbrs)

    @property
    def min_weight(self):
        return float(self.weights.min())

    @property
    def volume(self):
        return float(self.measure.sum())

    def edge_list(self):
        return [(int(a), int(b), float(w)) for a, b, w in zip(self.heads, self.tails, self.weights)]

    def require_connected(self):
        if not self.connected:
            comps = components(self)
            raise GraphError(f"graph is disconnected ({len(comps)} components: "
                             f"{[sorted(c)[:5] for c in comps]})")

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.heads, other.heads)
                and np.array_equal(self.tails, other.tails)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


def build_graph(edge_list, vertex_count=None):
    """Validate an edge list ``[(i, j, w), ...]`` and build a :class:`WeightedGraph`.

    A disconnected graph is built (``connected=False``); solvers reject it later.
    """
    edges = list(edge_list)
    if not edges:
        raise GraphError("empty edge list")
    seen = {}
    heads, tails, weights = [], [], []
    for e, item in enumerate(edges):
        if len(item) == 2:
            i, j, w = item[0], item[1], 1.0
        else:
            i, j, w = item
        if int(i) != i or int(j) != j or i < 0 or j < 0:
            raise GraphError(f"edge {e}: invalid vertex index ({i}, {j})", e)
        i, j, w = int(i), int(j), float(w)
        if vertex_count is not None and (i >= vertex_count or j >= vertex_count):
            raise GraphError(f"edge {e}: vertex index out of range ({i}, {j})", e)
        if i == j:
            raise GraphError(f"edge {e}: self-loop at vertex {i}", e)
        if not np.isfinite(w) or w <= 0:
            raise GraphError(f"edge {e}: non-positive weight {w}", e)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphError(f"edge {e}: duplicate of edge {seen[key]} {key}", e)
        seen[key] = e
        heads.append(key[0])
        tails.append(key[1])
        weights.append(w)
    n = vertex_count if vertex_count is not None else max(tails) + 1
    heads, tails, weights = map(np.asarray, (heads, tails, weights))
    order = np.lexsort((tails, heads))
    heads, tails, weights = heads[order], tails[order], weights[order]
    psi = np.zeros(n)
    np.add.at(psi, heads, weights)
    np.add.at(psi, tails, weights)
    isolated = np.flatnonzero(psi == 0)
    if isolated.size:
        raise GraphError(f"isolated vertex {int(isolated[0])}", int(isolated[0]))
    g = WeightedGraph(n, _frozen(heads, int), _frozen(tails, int), _frozen(weights),
                      _frozen(psi))
    object.__setattr__(g, "connected", len(components(g)) == 1)
    return g


def components(g):
    label = -np.ones(g.n, dtype=int)
    comps = []
    for s in range(g.n):
        if label[s] >= 0:
            continue
        label[s] = len(comps)
        comp, queue = [s], deque([s])
        while queue:
            x = queue.popleft()
            for y in g.neighbors[x]:
                if label[y] < 0:
                    label[y] = label[s]
                    comp.append(y)
                    queue.append(y)
        comps.append(comp)
    return comps


def as_function(g, u, name="u"):
    """Check ``u`` is a finite real vector indexed like ``g``'s vertices."""
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n,):
        raise ValueError(f"{name} has shape {u.shape}, expected ({g.n},)")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} contains non-finite values")
    return u


def integral(g, u, mask=None):
    """``sum_x psi(x) u(x)``, optionally restricted to a boolean vertex mask."""
    u = as_function(g, u)
    if mask is not None:
        return float(np.sum(g.measure[mask] * u[mask]))
    return float(np.dot(g.measure, u))


def bfs_distances(g, origin):
    """Hop distance from ``origin`` to every vertex; ``-1`` when unreachable."""
    dist = -np.ones(g.n, dtype=int)
    dist[origin] = 0
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        for y in g.neighbors[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def distance(g, x, origin):
    d = bfs_distances(g, origin)[x]
    if d < 0:
        raise GraphError(f"vertex {x} is not reachable from {origin}: "
                         f"graph has {len(components(g))} components", x)
    return int(d)


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """A vertex subset with its boundary and interior derived from the graph."""

    graph: WeightedGraph = field(repr=False)
    omega: tuple

    @cached_property
    def mask(self):
        m = np.zeros(self.graph.n, dtype=bool)
        m[list(self.omega)] = True
        m.setflags(write=False)
        return m

    @cached_property
    def boundary(self):
        inside = self.mask
        return tuple(x for x in self.omega
                     if any(not inside[y] for y in self.graph.neighbors[x]))

    @cached_property
    def interior(self):
        b = set(self.boundary)
        return tuple(x for x in self.omega if x not in b)

    @cached_property
    def boundary_mask(self):
        m = np.zeros(self.graph.n, dtype=bool)
        m[list(self.boundary)] = True
        return m

    @cached_property
    def interior_mask(self):
        m = np.zeros(self.graph.n, dtype=bool)
        m[list(self.interior)] = True
        return m


def make_domain(g, omega):
    omega = sorted({int(x) for x in omega})
    if not omega:
        raise GraphError("empty domain")
    bad = [x for x in omega if x < 0 or x >= g.n]
    if bad:
        raise GraphError(f"domain vertex {bad[0]} out of range", bad[0])
    return DomainSpec(g, tuple(omega))


@dataclass(frozen=True)
class BallFamily:
    """Nested balls ``V_k = {rho < k}`` and shells ``{rho = k}``, k = 1..K."""

    center: int
    radii: tuple
    balls: tuple
    ball_boundaries: tuple
    rho: np.ndarray = field(repr=False)

    def domain(self, g, k):
        """Dirichlet domain ``V_k`` plus its shell, so the shell is the boundary."""
        i = self.radii.index(k)
        return make_domain(g, self.balls[i] + self.ball_boundaries[i])


def ball_family(g, center, K):
    if K < 1:
        raise ValueError("K must be >= 1")
    rho = bfs_distances(g, center)
    balls, shells = [], []
    for k in range(1, K + 1):
        balls.append(tuple(np.flatnonzero((rho >= 0) & (rho < k)).tolist()))
        shells.append(tuple(np.flatnonzero(rho == k).tolist()))
    return BallFamily(center, tuple(range(1, K + 1)), tuple(balls), tuple(shells),
                      _frozen(rho, int))


def generate(family, *params, seed=0, weight=1.0):
    """Build a standard graph family.

    ``family`` is one of ``path n``, ``cycle n``, ``complete n``, ``star n``
    (n vertices, center 0), ``grid a b`` and ``random n p`` (random-connected).
    """
    family = family.replace("_", "-")
    try:
        ints = [int(p) for p in params[:2]]
    except (TypeError, ValueError):
        raise ValueError(f"invalid parameters {params} for {family}") from None
    if weight <= 0:
        raise ValueError("weight must be positive")
    if family == "path":
        (n,) = ints[:1]
        _need(n >= 2, "path needs n >= 2")
        edges = [(i, i + 1) for i in range(n - 1)]
    elif family == "cycle":
        (n,) = ints[:1]
        _need(n >= 3, "cycle needs n >= 3")
        edges = [(i, (i + 1) % n) for i in range(n)]
    elif family == "complete":
        (n,) = ints[:1]
        _need(n >= 2, "complete needs n >= 2")
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif family == "star":
        (n,) = ints[:1]
        _need(n >= 2, "star needs n >= 2")
        edges = [(0, i) for i in range(1, n)]
    elif family == "grid":
        _need(len(ints) == 2, "grid needs a and b")
        a, b = ints
        _need(a >= 1 and b >= 1 and a * b >= 2, "grid needs a*b >= 2")
        idx = lambda r, c: r * b + c  # noqa: E731
        edges = [(idx(r, c), idx(r, c + 1)) for r in range(a) for c in range(b - 1)]
        edges += [(idx(r, c), idx(r + 1, c)) for r in range(a - 1) for c in range(b)]
    elif family in ("random", "random-connected"):
        n = int(params[0])
        p = float(params[1])
        _need(n >= 2 and 0 < p <= 1, "random needs n >= 2 and 0 < p <= 1")
        rng = np.random.default_rng(np.uint64(seed))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for _ in range(10_000):
            keep = rng.random(len(pairs)) < p
            edges = [e for e, k in zip(pairs, keep) if k]
            if edges and len({v for e in edges for v in e}) == n:
                g = build_graph([(i, j, weight) for i, j in edges], n)
                if g.connected:
                    return g
        raise ValueError(f"could not draw a connected graph with n={n}, p={p}")
    else:
        raise ValueError(f"unknown graph family {family!r}")
    return build_graph([(i, j, weight) for i, j in edges])


def _need(cond, msg):
    if not cond:
        raise ValueError(msg)


def grid_index(a, b, r, c):
    return r * b + c
