"""Exhaustive solvers for tiny instances.

Every first-stage set is enumerated.  For each one the cheapest exact
completion per scenario is found, and the requested objective is evaluated
exactly.  For the graph problems the completions come from bitmask tables.
``labels[mask]`` holds connected-component labels of the subgraph made of
the edges in ``mask``.  A superset-minimum transform over feasible masks then
gives the cheapest completion of every first-stage set in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import expected_max_batch, truncated_batch
from .facility_problems import KCenterInstance, KCenterSolution, UflInstance, UflSolution
from .graph_problems import MinCutInstance, MstInstance, SteinerInstance, TwoStageEdgeSolution
from .graphs import Graph, max_flow_min_cut

ELEMENT_CAP = 12
SCENARIO_CAP = 12


class OracleCapExceeded(ValueError):
    pass


@dataclass
class OracleResult:
    opt_value: float
    opt_solution: object
    objective: str
    costs: np.ndarray = field(default=None, repr=False)


# ------------------------------------------------------------ graph tables


def _component_labels(graph: Graph) -> np.ndarray:
    # (2^E, n) labels; bit e of the row index means edge e is present
    L = np.arange(graph.n, dtype=np.int16)[None, :]
    for u, v, _ in graph.edges:
        lu = L[:, u : u + 1]
        lv = L[:, v : v + 1]
        merged = np.where(L == lv, lu, L)
        L = np.concatenate([L, merged], axis=0)
    return L


def _mask_sums(weights) -> np.ndarray:
    out = np.zeros(1)
    for w in weights:
        out = np.concatenate([out, out + w])
    return out


def _superset_min(h: np.ndarray, E: int) -> np.ndarray:
    g = h.copy()
    for i in range(E):
        view = g.reshape(-1, 2, 1 << i)
        np.minimum(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])
    return g


def _edge_weights(inst, s):
    if isinstance(inst, MstInstance):
        return inst.cost2[s]
    return [inst.inflation[s] * c for c in inst.graph.costs]


def _first_weights(inst):
    return inst.cost1 if isinstance(inst, MstInstance) else inst.graph.costs


def _feasible_masks(inst, labels: np.ndarray, s: int) -> np.ndarray:
    if isinstance(inst, MstInstance):
        return np.all(labels == labels[:, :1], axis=1)
    if isinstance(inst, SteinerInstance):
        verts = sorted(inst.scenarios[s] | {inst.root})
        return np.all(labels[:, verts] == labels[:, [inst.root]], axis=1)
    # min-cut: bought edges are deleted, so look at the complement's labels
    full = labels.shape[0] - 1
    comp = labels[full ^ np.arange(labels.shape[0])]
    return comp[:, inst.root] != comp[:, inst.terminals[s]]


@lru_cache(maxsize=16)
def _graph_tables(inst):
    g = inst.graph
    if g.m > ELEMENT_CAP:
        raise OracleCapExceeded(f"{g.m} edges exceed the enumeration cap of {ELEMENT_CAP}")
    if inst.m > SCENARIO_CAP:
        raise OracleCapExceeded(f"{inst.m} scenarios exceed the cap of {SCENARIO_CAP}")
    labels = _component_labels(g)
    first = _mask_sums(_first_weights(inst))
    h_tables, costs = [], np.empty((1 << g.m, inst.m))
    for s in range(inst.m):
        w = _mask_sums(_edge_weights(inst, s))
        h = np.where(_feasible_masks(inst, labels, s), w, np.inf)
        best = _superset_min(h, g.m)
        costs[:, s] = first + np.maximum(best - w, 0.0)
        h_tables.append(h)
    return costs, h_tables


def _mask_to_set(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def _best_completion_mask(h: np.ndarray, X1: int) -> int:
    masks = np.arange(h.shape[0])
    sel = np.flatnonzero((masks & X1) == X1)
    j = sel[np.argmin(h[sel])]
    if not math.isfinite(h[j]):
        raise OracleCapExceeded("scenario cannot be completed")
    return int(j)


# -------------------------------------------------------------- UFL tables


@lru_cache(maxsize=16)
def _ufl_tables(inst: UflInstance):
    nf = inst.nf
    if nf > ELEMENT_CAP // 2 + 1:
        raise OracleCapExceeded(f"{nf} facilities exceed the UFL cap")
    if inst.m > SCENARIO_CAP:
        raise OracleCapExceeded(f"{inst.m} scenarios exceed the cap of {SCENARIO_CAP}")
    c = inst.c
    N = 1 << nf
    masks = np.arange(N)
    first = _mask_sums(inst.f1)
    costs = np.empty((N, inst.m))
    choice = np.zeros((N, inst.m), dtype=np.int64)
    for s in range(inst.m):
        clients = inst.clients(s)
        conn = np.zeros(N)
        if clients:
            conn[0] = np.inf
            for Y in range(1, N):
                idx = [i for i in range(nf) if Y >> i & 1]
                conn[Y] = c[np.ix_(idx, clients)].min(axis=0).sum()
        f2 = _mask_sums(inst.f2[s])
        for X1 in range(N):
            total = f2 + conn[X1 | masks]
            j = int(np.argmin(total))
            costs[X1, s] = first[X1] + total[j]
            choice[X1, s] = j
    return costs, choice


# ------------------------------------------------------------------ tables


def solution_table(inst):
    """(first-stage keys, cost matrix) over every first-stage choice.

    Row r holds the per-scenario costs of the cheapest completion of the
    r-th first-stage set (graph edge mask, facility mask, or center tuple).
    Rows that cannot be completed contain inf.
    """
    if isinstance(inst, (MstInstance, SteinerInstance, MinCutInstance)):
        costs, _ = _graph_tables(inst)
        return list(range(costs.shape[0])), costs
    if isinstance(inst, UflInstance):
        costs, _ = _ufl_tables(inst)
        return list(range(costs.shape[0])), costs
    if isinstance(inst, KCenterInstance):
        if inst.n > 12:
            raise OracleCapExceeded("too many points for center enumeration")
        c = inst.c
        keys = list(combinations(range(inst.n), min(inst.k, inst.n)))
        return keys, np.array([c[list(X), :].min(axis=0) for X in keys])
    raise TypeError(f"no oracle for {type(inst).__name__}")


def solution_for_key(inst, key):
    if isinstance(inst, (MstInstance, SteinerInstance, MinCutInstance)):
        _, h_tables = _graph_tables(inst)
        X1 = _mask_to_set(key)
        second = []
        for s in range(inst.m):
            M = _best_completion_mask(h_tables[s], key)
            second.append(_mask_to_set(M) - X1)
        return TwoStageEdgeSolution(X1, tuple(second))
    if isinstance(inst, UflInstance):
        _, choice = _ufl_tables(inst)
        X2 = [_mask_to_set(int(choice[key, s])) - _mask_to_set(key) for s in range(inst.m)]
        return UflSolution(_mask_to_set(key), X2)
    if isinstance(inst, KCenterInstance):
        return KCenterSolution(frozenset(key))
    raise TypeError(f"no oracle for {type(inst).__name__}")


def objective_values(cost_rows: np.ndarray, probs, objective: str, rho: float | None = None, D=None) -> np.ndarray:
    """Row-wise objective; rows containing inf evaluate to inf."""
    cost_rows = np.atleast_2d(cost_rows)
    out = np.full(cost_rows.shape[0], np.inf)
    ok = np.all(np.isfinite(cost_rows), axis=1)
    rows = cost_rows[ok]
    if objective == "emax":
        out[ok] = expected_max_batch(rows, probs)
    elif objective == "trunc":
        out[ok] = truncated_batch(rows, probs)
    elif objective == "hybrid":
        out[ok] = rho * rows.max(axis=1, initial=0.0) + (1.0 - rho) * rows @ np.asarray(D, dtype=float)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return out


def _ufl_all_closed_fix(inst: UflInstance, objective, probs, rho=None, D=None):
    # no demand anywhere: the empty solution breaks the feasibility rule,
    # so try each single second-stage opening instead
    best = (math.inf, None, None)
    for s in range(inst.m):
        for i in range(inst.nf):
            if not math.isfinite(inst.f2[s][i]):
                continue
            row = np.zeros(inst.m)
            row[s] = inst.f2[s][i]
            v = objective_values(row, probs, objective, rho, D)[0]
            if v < best[0]:
                X2 = [set() for _ in range(inst.m)]
                X2[s] = {i}
                best = (v, UflSolution(set(), X2), row)
    return best


def brute_force_opt(inst, objective: str = "emax") -> OracleResult:
    """Exact optimum of ``objective`` ("emax", "trunc" or "hybrid")."""
    from .reductions import HybridInstance

    rho = D = None
    base = inst
    if isinstance(inst, HybridInstance):
        objective = "hybrid"
        base, rho, D = inst.base, inst.rho, inst.dist
        probs = None
    else:
        if objective == "hybrid":
            raise ValueError("the hybrid objective needs a HybridInstance")
        probs = base.probs
        if len(probs) > SCENARIO_CAP:
            raise OracleCapExceeded("too many scenarios for exact enumeration")
    keys, costs = solution_table(base)
    values = objective_values(costs, probs, objective, rho, D)
    if isinstance(base, UflInstance) and not any(any(r) for r in base.demands):
        values[0] = np.inf
        v, sol, row = _ufl_all_closed_fix(base, objective, probs, rho, D)
        j = int(np.argmin(values))
        if v <= values[j]:
            return OracleResult(float(v), sol, objective, row)
    j = int(np.argmin(values))
    if not math.isfinite(values[j]):
        raise ValueError("instance has no feasible solution")
    return OracleResult(float(values[j]), solution_for_key(base, keys[j]), objective, costs[j].copy())


def exact_second_stage(inst, X1, s: int):
    """(cost, X_2^(s)) of the cheapest completion of X1 for scenario s."""
    X1 = frozenset(X1)
    if isinstance(inst, MinCutInstance):
        g = inst.graph
        value, cut = max_flow_min_cut(g, g.costs, inst.root, {inst.terminals[s]}, exclude=X1)
        return inst.inflation[s] * value, cut
    if isinstance(inst, (MstInstance, SteinerInstance)):
        _, h_tables = _graph_tables(inst)
        key = sum(1 << e for e in X1)
        M = _best_completion_mask(h_tables[s], key)
        X2 = _mask_to_set(M) - X1
        w = _edge_weights(inst, s)
        return math.fsum(w[e] for e in X2), X2
    if isinstance(inst, UflInstance):
        costs, choice = _ufl_tables(inst)
        key = sum(1 << i for i in X1)
        X2 = _mask_to_set(int(choice[key, s])) - X1
        return float(costs[key, s] - math.fsum(inst.f1[i] for i in X1)), X2
    if isinstance(inst, KCenterInstance):
        return 0.0, frozenset()
    raise TypeError(f"no oracle for {type(inst).__name__}")
