"""Undirected graph substrate: max flow / min cut, shortest paths, forests.

Edges are referred to by their index in ``Graph.edges``; every edge set in
this package is a frozenset of such indices.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

FLOW_TOL = 1e-12


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v), float(c)) for u, v, c in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        for u, v, c in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) has a vertex outside [0, {self.n})")
            if u == v:
                raise ValueError(f"self loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"parallel edge {key}")
            seen.add(key)
            if c < 0 or not math.isfinite(c):
                raise ValueError("edge costs must be finite and nonnegative")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def costs(self) -> tuple[float, ...]:
        return tuple(c for _, _, c in self.edges)

    def incidence(self) -> list[list[tuple[int, int]]]:
        """adj[v] = [(neighbor, edge index), ...]"""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for i, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, i))
            adj[v].append((u, i))
        return adj

    def cut_edges(self, side: Iterable[int]) -> frozenset[int]:
        side = set(side)
        return frozenset(i for i, (u, v, _) in enumerate(self.edges) if (u in side) != (v in side))


class DisjointSets:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def components(graph: Graph, edge_set: Iterable[int]) -> DisjointSets:
    ds = DisjointSets(graph.n)
    for i in edge_set:
        u, v, _ = graph.edges[i]
        ds.union(u, v)
    return ds


def spans(graph: Graph, edge_set: Iterable[int]) -> bool:
    ds = components(graph, edge_set)
    root = ds.find(0)
    return all(ds.find(v) == root for v in range(graph.n))


def connects(graph: Graph, edge_set: Iterable[int], vertices: Iterable[int]) -> bool:
    ds = components(graph, edge_set)
    roots = {ds.find(v) for v in vertices}
    return len(roots) <= 1


def reachable(graph: Graph, source: int, removed: Iterable[int] = ()) -> set[int]:
    removed = set(removed)
    adj = graph.incidence()
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, i in adj[u]:
            if i not in removed and v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _source_side(graph: Graph, weights: Sequence[float], source: int, sinks: set[int], exclude: set[int]) -> set[int]:
    # Edmonds-Karp; returns the vertices reachable from source in the final residual graph
    n = graph.n
    T = n  # super sink
    cap: list[dict[int, float]] = [dict() for _ in range(n + 1)]
    for i, (u, v, _) in enumerate(graph.edges):
        if i in exclude:
            continue
        w = float(weights[i])
        if w < 0:
            raise ValueError("capacities must be nonnegative")
        cap[u][v] = cap[u].get(v, 0.0) + w
        cap[v][u] = cap[v].get(u, 0.0) + w
    for t in sinks:
        cap[t][T] = math.inf
        cap[T].setdefault(t, 0.0)

    while True:
        pred = {source: source}
        queue = deque([source])
        while queue and T not in pred:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > FLOW_TOL and v not in pred:
                    pred[v] = u
                    queue.append(v)
        if T not in pred:
            return set(pred)
        bottleneck = math.inf
        v = T
        while v != source:
            u = pred[v]
            bottleneck = min(bottleneck, cap[u][v])
            v = u
        v = T
        while v != source:
            u = pred[v]
            cap[u][v] -= bottleneck
            cap[v][u] = cap[v].get(u, 0.0) + bottleneck
            v = u


def max_flow_min_cut(graph: Graph, weights: Sequence[float], source: int, sinks: Iterable[int], exclude: Iterable[int] = ()) -> tuple[float, frozenset[int]]:
    """Minimum-weight edge set separating ``source`` from every sink.

    Edges in ``exclude`` are treated as already deleted and never appear in
    the returned cut.  Shortest augmenting paths (Edmonds-Karp) on the
    residual network of the undirected capacities; a super sink joins the
    sinks with infinite capacity.
    """
    sinks = set(sinks)
    if source in sinks:
        raise ValueError("invalid instance: source is one of the sinks")
    if not sinks:
        return 0.0, frozenset()
    exclude = set(exclude)
    side = _source_side(graph, weights, source, sinks, exclude)
    cut = frozenset(i for i in graph.cut_edges(side) if i not in exclude)
    return math.fsum(float(weights[i]) for i in cut), cut


def global_min_cut(graph: Graph, weights: Sequence[float]) -> tuple[float, frozenset[int]]:
    """Lightest boundary of a nonempty proper vertex subset.

    Returns (value, side) with vertex 0 on the side.  A disconnected graph
    gives value 0.
    """
    if graph.n < 2:
        return math.inf, frozenset()
    best, best_side = math.inf, frozenset()
    for t in range(1, graph.n):
        side = _source_side(graph, weights, 0, {t}, set())
        value = math.fsum(float(weights[i]) for i in graph.cut_edges(side))
        if value < best:
            best, best_side = value, frozenset(side)
    return best, best_side


def dijkstra(graph: Graph, weights: Sequence[float], source, removed: Iterable[int] = ()):
    """(dist, pred_edge) from ``source`` (a vertex or a set of vertices).

    pred_edge[v] is the last edge on a shortest path to v.
    """
    removed = set(removed)
    adj = graph.incidence()
    dist = [math.inf] * graph.n
    pred: list[int | None] = [None] * graph.n
    sources = [source] if isinstance(source, int) else list(source)
    for v in sources:
        dist[v] = 0.0
    heap = [(0.0, v) for v in sources]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, i in adj[u]:
            if i in removed:
                continue
            nd = d + float(weights[i])
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = i
                heapq.heappush(heap, (nd, v))
    return dist, pred


def path_edges(graph: Graph, pred, source, target: int) -> list[int]:
    sources = {source} if isinstance(source, int) else set(source)
    out = []
    v = target
    while v not in sources:
        i = pred[v]
        if i is None:
            raise ValueError(f"vertex {target} unreachable from {source}")
        out.append(i)
        u, w, _ = graph.edges[i]
        v = u if w == v else w
    return out[::-1]


def shortest_path(graph: Graph, weights: Sequence[float], source: int, target: int) -> tuple[float, list[int]]:
    dist, pred = dijkstra(graph, weights, source)
    if math.isinf(dist[target]):
        return math.inf, []
    return dist[target], path_edges(graph, pred, source, target)


def kruskal(graph: Graph, weights: Sequence[float], initial: Iterable[int] = (), allowed: Iterable[int] | None = None) -> frozenset[int]:
    """Edges added (beyond ``initial``) to make a cheapest spanning forest."""
    ds = components(graph, initial)
    pool = range(graph.m) if allowed is None else allowed
    added = []
    for i in sorted(pool, key=lambda i: (float(weights[i]), i)):
        u, v, _ = graph.edges[i]
        if ds.union(u, v):
            added.append(i)
    return frozenset(added)
