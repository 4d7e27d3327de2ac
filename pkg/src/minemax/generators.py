"""Seeded instance generators for corpora and tests.

Every generator is a pure function of its parameters and seed.  Costs are
small integers and probabilities are rounded to two decimals so that files
stay readable.
"""

from __future__ import annotations

import numpy as np

from .facility_problems import KCenterInstance, UflInstance, metric_from_points
from .graph_problems import MinCutInstance, MstInstance, SteinerInstance
from .graphs import Graph
from .reductions import HybridInstance

FAMILIES = ("star", "random-graph", "random-metric", "clustered-metric", "hybrid-wrap")


class UnknownFamily(ValueError):
    pass


def _probs(rng, m):
    return tuple(float(x) for x in np.round(rng.uniform(0.05, 1.0, m), 2))


def _round_point(pts):
    return np.round(pts, 3)


def star(m=4, costs=(3, 2, 4, 9), sigma=2.0, probs=(0.1, 0.8, 0.3, 1.0), seed=0):
    """Root 0 joined to leaves 1..m; scenario i asks to connect leaf i."""
    if len(costs) != m or len(probs) != m:
        raise ValueError("star needs one cost and one probability per leaf")
    g = Graph(m + 1, tuple((0, i + 1, float(c)) for i, c in enumerate(costs)))
    return SteinerInstance(g, 0, tuple(frozenset({i + 1}) for i in range(m)), (float(sigma),) * m, tuple(probs))


def random_graph(n=6, m=3, problem="mincut", edge_prob=0.4, max_edges=12, max_cost=9, seed=0):
    """Connected random graph: a random spanning tree plus extra edges."""
    rng = np.random.default_rng(seed)
    if n < 2:
        raise ValueError("random-graph needs n >= 2")
    edges = {}
    perm = rng.permutation(n)
    for i in range(1, n):
        u, v = int(perm[i]), int(perm[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = None
    for u in range(n):
        for v in range(u + 1, n):
            if len(edges) >= max_edges:
                break
            if (u, v) not in edges and rng.random() < edge_prob:
                edges[(u, v)] = None
    keys = sorted(edges)
    g = Graph(n, tuple((u, v, float(rng.integers(1, max_cost + 1))) for u, v in keys))
    probs = _probs(rng, m)
    sigma = tuple(float(x) for x in np.round(rng.uniform(1.0, 4.0, m), 1))
    if problem == "mincut":
        terms = tuple(int(t) for t in rng.integers(1, n, m))
        return MinCutInstance(g, 0, terms, sigma, probs)
    if problem == "steiner":
        scen = []
        for _ in range(m):
            size = int(rng.integers(1, min(3, n - 1) + 1))
            scen.append(frozenset(int(t) for t in rng.choice(np.arange(1, n), size, replace=False)))
        return SteinerInstance(g, 0, tuple(scen), sigma, probs)
    if problem == "mst":
        c1 = g.costs
        cost2 = tuple(tuple(float(c * x) for c, x in zip(c1, np.round(rng.uniform(1.0, 4.0, g.m), 1))) for _ in range(m))
        return MstInstance(g, tuple(c1), cost2, probs)
    raise ValueError(f"random-graph cannot make {problem!r}")


def _metric_instance(pts, problem, rng, m, k, n_fac):
    if problem == "kcenter":
        c = np.round(metric_from_points(pts), 6)
        return KCenterInstance(tuple(map(tuple, c.tolist())), k, _probs(rng, len(pts)))
    if problem == "ufl":
        fac, cli = pts[:n_fac], pts[n_fac:]
        c = np.round(np.linalg.norm(fac[:, None, :] - cli[None, :, :], axis=2), 6)
        demands = rng.integers(0, 2, (m, len(cli)))
        for row in demands:
            if not row.any():
                row[rng.integers(0, len(cli))] = 1
        f1 = np.round(rng.uniform(1.0, 5.0, n_fac), 1)
        f2 = np.round(f1[None, :] * rng.uniform(1.5, 3.0, (m, n_fac)), 1)
        return UflInstance(tuple(map(tuple, c.tolist())), tuple(map(tuple, demands.tolist())), tuple(f1.tolist()), tuple(map(tuple, f2.tolist())), _probs(rng, m))
    raise ValueError(f"metric families cannot make {problem!r}")


def random_metric(n=5, problem="kcenter", k=2, m=3, facilities=3, seed=0):
    """Uniform points in the 10x10 square.  For UFL the first ``facilities`` points are facilities."""
    rng = np.random.default_rng(seed)
    total = n + (facilities if problem == "ufl" else 0)
    pts = _round_point(rng.uniform(0.0, 10.0, (total, 2)))
    return _metric_instance(pts, problem, rng, m, k, facilities)


def clustered_metric(n=6, problem="kcenter", k=2, m=3, facilities=3, clusters=2, spread=0.5, seed=0):
    """Gaussian blobs around ``clusters`` uniform centers."""
    rng = np.random.default_rng(seed)
    total = n + (facilities if problem == "ufl" else 0)
    centers = rng.uniform(0.0, 10.0, (clusters, 2))
    pts = _round_point(centers[rng.integers(0, clusters, total)] + rng.normal(0.0, spread, (total, 2)))
    return _metric_instance(pts, problem, rng, m, k, facilities)


def hybrid_wrap(n=5, m=3, problem="mincut", rho=0.5, seed=0, **graph_params):
    """A random-graph base with a random scenario distribution D."""
    rng = np.random.default_rng([seed, 1])
    base = random_graph(n=n, m=m, problem=problem, seed=seed, **graph_params)
    w = rng.integers(1, 10, m).astype(float)
    D = w / w.sum()
    D[-1] = 1.0 - D[:-1].sum()
    return HybridInstance(base, float(rho), tuple(float(x) for x in D))


_DISPATCH = {
    "star": star,
    "random-graph": random_graph,
    "random-metric": random_metric,
    "clustered-metric": clustered_metric,
    "hybrid-wrap": hybrid_wrap,
}


def generate(family: str, seed: int = 0, **params):
    try:
        fn = _DISPATCH[family]
    except KeyError:
        raise UnknownFamily(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}") from None
    return fn(seed=seed, **params)
