import math

import networkx as nx
import numpy as np
import pytest

from minemax.graphs import (
    DisjointSets,
    Graph,
    connects,
    dijkstra,
    global_min_cut,
    kruskal,
    max_flow_min_cut,
    reachable,
    shortest_path,
    spans,
)


def random_graph(rng, n, p):
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, float(rng.integers(1, 10))))
    return Graph(n, tuple(edges))


def to_nx(g, weights=None):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    w = g.costs if weights is None else weights
    for i, (u, v, _) in enumerate(g.edges):
        G.add_edge(u, v, capacity=w[i], weight=w[i])
    return G


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(2, ((0, 0, 1.0),))
    with pytest.raises(ValueError):
        Graph(2, ((0, 1, 1.0), (1, 0, 2.0)))
    with pytest.raises(ValueError):
        Graph(2, ((0, 1, -1.0),))


def test_single_edge_cut():
    g = Graph(2, ((0, 1, 1.0),))
    assert max_flow_min_cut(g, g.costs, 0, {1}) == (1.0, frozenset({0}))


def test_two_parallel_paths():
    # 0-1-3 with capacities 2,5 and 0-2-3 with 3,4: bottlenecks 2 and 3
    g = Graph(4, ((0, 1, 2.0), (1, 3, 5.0), (0, 2, 3.0), (2, 3, 4.0)))
    value, cut = max_flow_min_cut(g, g.costs, 0, {3})
    assert value == 5.0
    assert cut == frozenset({0, 2})


def test_disconnected_sink_has_empty_cut():
    g = Graph(3, ((0, 1, 4.0),))
    assert max_flow_min_cut(g, g.costs, 0, {2}) == (0.0, frozenset())


def test_source_in_sinks_rejected():
    g = Graph(2, ((0, 1, 1.0),))
    with pytest.raises(ValueError, match="invalid instance"):
        max_flow_min_cut(g, g.costs, 0, {0, 1})


def test_excluded_edges_never_cut():
    g = Graph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)))
    value, cut = max_flow_min_cut(g, g.costs, 0, {2}, exclude={0})
    assert value == 5.0 and cut == frozenset({2})


@pytest.mark.parametrize("seed", range(25))
def test_max_flow_matches_networkx(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 7, 0.45)
    sinks = {int(x) for x in rng.choice(np.arange(1, 7), 2, replace=False)}
    value, cut = max_flow_min_cut(g, g.costs, 0, sinks)
    G = to_nx(g)
    G.add_node("T")
    for t in sinks:
        G.add_edge(t, "T", capacity=math.inf)
    ref = nx.maximum_flow_value(G, 0, "T") if g.m else 0.0
    assert value == pytest.approx(ref, abs=1e-9)
    assert sum(g.costs[e] for e in cut) == pytest.approx(value)
    left = reachable(g, 0, cut)
    assert not left & sinks


@pytest.mark.parametrize("seed", range(15))
def test_global_min_cut_matches_stoer_wagner(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_graph(rng, 6, 0.6)
    G = to_nx(g)
    if not nx.is_connected(G):
        assert global_min_cut(g, g.costs)[0] == 0.0
        return
    ref, _ = nx.stoer_wagner(G, weight="weight")
    value, side = global_min_cut(g, g.costs)
    assert value == pytest.approx(ref)
    assert 0 in side and len(side) < g.n
    assert sum(g.costs[e] for e in g.cut_edges(side)) == pytest.approx(value)


@pytest.mark.parametrize("seed", range(10))
def test_dijkstra_matches_networkx(seed):
    rng = np.random.default_rng(200 + seed)
    g = random_graph(rng, 8, 0.4)
    dist, _ = dijkstra(g, g.costs, 0)
    ref = nx.single_source_dijkstra_path_length(to_nx(g), 0)
    for v in range(g.n):
        assert dist[v] == pytest.approx(ref.get(v, math.inf))
    for v in ref:
        d, path = shortest_path(g, g.costs, 0, v)
        assert d == pytest.approx(ref[v])
        assert sum(g.costs[e] for e in path) == pytest.approx(d)


@pytest.mark.parametrize("seed", range(10))
def test_kruskal_weight_matches_networkx(seed):
    rng = np.random.default_rng(300 + seed)
    g = random_graph(rng, 7, 0.5)
    T = kruskal(g, g.costs)
    ref = nx.minimum_spanning_tree(to_nx(g)).size(weight="weight")
    assert sum(g.costs[e] for e in T) == pytest.approx(ref)


def test_kruskal_respects_initial_and_allowed():
    g = Graph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 10.0)))
    added = kruskal(g, g.costs, initial={2})
    assert len(added) == 1 and spans(g, added | {2})
    assert kruskal(g, g.costs, allowed={0}) == frozenset({0})


def test_connectivity_helpers():
    g = Graph(4, ((0, 1, 1.0), (2, 3, 1.0)))
    assert connects(g, {0}, [0, 1])
    assert not connects(g, {0, 1}, [0, 2])
    assert not spans(g, {0, 1})
    ds = DisjointSets(3)
    assert ds.union(0, 1) and not ds.union(1, 0)
