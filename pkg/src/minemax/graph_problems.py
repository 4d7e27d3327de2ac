"""MinEMax spanning tree, rooted Steiner tree and min-cut.

Each problem has an instance type, an LP over the truncated objective,
a rounding (or, for min-cut, the complete threshold algorithm) and a
per-scenario evaluator.  Scenario probabilities may have total mass below
one; the objectives then behave as if a zero-cost dummy scenario with
probability 1 were present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InfeasibleSolution
from .graphs import (
    Graph,
    connects,
    dijkstra,
    global_min_cut,
    kruskal,
    max_flow_min_cut,
    path_edges,
    reachable,
    spans,
)
from .lp import (
    LinearExpr,
    LinearProgram,
    LpError,
    LpSolution,
    Row,
    encode_truncated_objective,
    solve,
    solve_with_separation,
)

__all__ = [
    "Graph",
    "MstInstance",
    "SteinerInstance",
    "MinCutInstance",
    "TwoStageEdgeSolution",
    "max_flow_min_cut",
    "mst_lp",
    "round_mst",
    "solve_mst",
    "steiner_lp",
    "round_steiner",
    "solve_steiner",
    "mincut_lp",
    "solve_mincut",
    "evaluate_graph_solution",
    "is_feasible",
]

INTEGRAL_TOL = 1e-7
SEP_TOL = 1e-7


def _check_probs(probs, m):
    probs = tuple(float(p) for p in probs)
    if len(probs) != m:
        raise ValueError(f"expected {m} scenario probabilities, got {len(probs)}")
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise ValueError("probabilities must lie in [0, 1]")
    return probs


def _check_inflation(inflation, m):
    inflation = tuple(float(x) for x in inflation)
    if len(inflation) != m:
        raise ValueError("one inflation factor per scenario required")
    if any(x < 0 or not math.isfinite(x) for x in inflation):
        raise ValueError("inflation factors must be finite and nonnegative")
    return inflation


@dataclass(frozen=True)
class MstInstance:
    graph: Graph
    cost1: tuple[float, ...]
    cost2: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        E = self.graph.m
        cost1 = tuple(float(c) for c in self.cost1)
        cost2 = tuple(tuple(float(c) for c in row) for row in self.cost2)
        if len(cost1) != E or any(len(row) != E for row in cost2):
            raise ValueError("cost vectors must be edge-aligned")
        if any(c < 0 for c in cost1) or any(c < 0 for row in cost2 for c in row):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "cost1", cost1)
        object.__setattr__(self, "cost2", cost2)
        object.__setattr__(self, "probs", _check_probs(self.probs, len(cost2)))

    @property
    def m(self) -> int:
        return len(self.cost2)


@dataclass(frozen=True)
class SteinerInstance:
    graph: Graph
    root: int
    scenarios: tuple[frozenset, ...]
    inflation: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        scen = tuple(frozenset(int(v) for v in S) for S in self.scenarios)
        for S in scen:
            if any(not 0 <= v < self.graph.n for v in S):
                raise ValueError("terminal outside the vertex range")
        if not 0 <= self.root < self.graph.n:
            raise ValueError("root outside the vertex range")
        object.__setattr__(self, "scenarios", scen)
        object.__setattr__(self, "inflation", _check_inflation(self.inflation, len(scen)))
        object.__setattr__(self, "probs", _check_probs(self.probs, len(scen)))

    @property
    def m(self) -> int:
        return len(self.scenarios)

    def terminals(self, s: int) -> list[int]:
        return sorted(self.scenarios[s] - {self.root})


@dataclass(frozen=True)
class MinCutInstance:
    graph: Graph
    root: int
    terminals: tuple[int, ...]
    inflation: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        terms = tuple(int(t) for t in self.terminals)
        for t in terms:
            if t == self.root:
                raise ValueError("a scenario terminal coincides with the root")
            if not 0 <= t < self.graph.n:
                raise ValueError("terminal outside the vertex range")
        object.__setattr__(self, "terminals", terms)
        object.__setattr__(self, "inflation", _check_inflation(self.inflation, len(terms)))
        object.__setattr__(self, "probs", _check_probs(self.probs, len(terms)))

    @property
    def m(self) -> int:
        return len(self.terminals)


@dataclass(frozen=True)
class TwoStageEdgeSolution:
    first_stage: frozenset
    second_stage: tuple[frozenset, ...]
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "first_stage", frozenset(self.first_stage))
        object.__setattr__(self, "second_stage", tuple(frozenset(x) for x in self.second_stage))


# ---------------------------------------------------------------- evaluation


def _scenario_ok(inst, X1, X2, s) -> bool:
    bought = X1 | X2
    if isinstance(inst, MstInstance):
        return spans(inst.graph, bought)
    if isinstance(inst, SteinerInstance):
        return connects(inst.graph, bought, inst.scenarios[s] | {inst.root})
    if isinstance(inst, MinCutInstance):
        return inst.terminals[s] not in reachable(inst.graph, inst.root, bought)
    raise TypeError(f"not a graph problem: {type(inst).__name__}")


def _scenario_cost(inst, X1, X2, s) -> float:
    if isinstance(inst, MstInstance):
        return math.fsum(inst.cost1[e] for e in X1) + math.fsum(inst.cost2[s][e] for e in X2)
    c = inst.graph.costs
    return math.fsum(c[e] for e in X1) + inst.inflation[s] * math.fsum(c[e] for e in X2)


def is_feasible(inst, sol: TwoStageEdgeSolution) -> bool:
    if len(sol.second_stage) != inst.m:
        return False
    return all(_scenario_ok(inst, sol.first_stage, sol.second_stage[s], s) for s in range(inst.m))


def evaluate_graph_solution(inst, sol: TwoStageEdgeSolution) -> np.ndarray:
    """Per-scenario costs; raises InfeasibleSolution naming the first bad scenario."""
    if len(sol.second_stage) != inst.m:
        raise ValueError(f"expected {inst.m} second-stage sets, got {len(sol.second_stage)}")
    out = np.empty(inst.m)
    for s in range(inst.m):
        X2 = sol.second_stage[s]
        if not _scenario_ok(inst, sol.first_stage, X2, s):
            raise InfeasibleSolution(s)
        out[s] = _scenario_cost(inst, sol.first_stage, X2, s)
    return out


def fractional_scenario_costs(inst, frac: LpSolution) -> np.ndarray:
    """cost(x_1, x_2^(s)) for every scenario of an MST or Steiner LP point."""
    E = inst.graph.m
    x1 = np.array([frac.value(f"x1[{e}]") for e in range(E)])
    out = np.empty(inst.m)
    for s in range(inst.m):
        x2 = np.array([frac.value(f"x2[{s},{e}]") for e in range(E)])
        if isinstance(inst, MstInstance):
            out[s] = x1 @ np.array(inst.cost1) + x2 @ np.array(inst.cost2[s])
        else:
            c = np.array(inst.graph.costs)
            out[s] = x1 @ c + inst.inflation[s] * (x2 @ c)
    return out


def _read_edge_vars(inst, frac: LpSolution):
    E = inst.graph.m
    x1 = np.array([frac.value(f"x1[{e}]") for e in range(E)])
    x2 = np.array([[frac.value(f"x2[{s},{e}]") for e in range(E)] for s in range(inst.m)])
    return x1, x2


def _integral_solution(inst, x1, x2):
    # return the 0/1 solution when the point is integral and feasible
    vals = np.concatenate([x1.ravel(), x2.ravel()])
    if np.any(np.abs(vals - np.round(vals)) > INTEGRAL_TOL):
        return None
    sol = TwoStageEdgeSolution(
        frozenset(np.flatnonzero(x1 > 0.5).tolist()),
        tuple(frozenset(np.flatnonzero(row > 0.5).tolist()) for row in x2),
    )
    return sol if is_feasible(inst, sol) else None


# ----------------------------------------------------------------------- MST


def mst_lp(inst: MstInstance):
    """(LinearProgram, separation oracle) for the cut-covering spanning LP."""
    g = inst.graph
    E = g.m
    lp = LinearProgram()
    x1 = [lp.add_var(f"x1[{e}]", hi=1.0) for e in range(E)]
    x2 = [[lp.add_var(f"x2[{s},{e}]", hi=1.0) for e in range(E)] for s in range(inst.m)]
    exprs = []
    for s in range(inst.m):
        coeffs = {x1[e]: inst.cost1[e] for e in range(E)}
        coeffs.update({x2[s][e]: inst.cost2[s][e] for e in range(E)})
        exprs.append(LinearExpr(coeffs))
    lp = encode_truncated_objective(exprs, inst.probs, lp)

    def cut_row(s, side):
        coeffs = {}
        for e in g.cut_edges(side):
            coeffs[x1[e]] = 1.0
            coeffs[x2[s][e]] = 1.0
        return Row(coeffs, 1.0)

    # singleton cuts seed the LP so the first rounds are not wasted
    if g.n >= 2:
        for s in range(inst.m):
            for v in range(g.n):
                row = cut_row(s, {v})
                lp.add_ge(row.coeffs, row.rhs)

    def oracle(point):
        rows = []
        if g.n < 2:
            return rows
        for s in range(inst.m):
            w = [point[x1[e]] + point[x2[s][e]] for e in range(E)]
            value, side = global_min_cut(g, w)
            if value < 1.0 - SEP_TOL:
                rows.append(cut_row(s, side))
        return rows

    return lp, oracle


def round_mst(inst: MstInstance, frac: LpSolution, seed: int = 0) -> TwoStageEdgeSolution:
    """Repeated independent sampling of the LP point, then greedy completion."""
    g = inst.graph
    x1, x2 = _read_edge_vars(inst, frac)
    exact = _integral_solution(inst, x1, x2)
    if exact is not None:
        return exact
    rounds = max(1, math.ceil(4.0 * (math.log(g.n) + math.log(max(inst.m, 1)))))
    X1: set[int] = set()
    X2: list[set[int]] = [set() for _ in range(inst.m)]
    for t in range(rounds):
        rng = np.random.default_rng([seed, t])
        X1.update(np.flatnonzero(rng.random(g.m) < x1).tolist())
        for s in range(inst.m):
            X2[s].update(np.flatnonzero(rng.random(g.m) < x2[s]).tolist())
    # cycles inside the first stage only cost money
    X1 = set(kruskal(g, inst.cost1, allowed=X1))
    second = []
    for s in range(inst.m):
        cand = X2[s] - X1
        cand |= kruskal(g, inst.cost2[s], initial=X1 | cand)
        second.append(kruskal(g, inst.cost2[s], initial=X1, allowed=cand))
    return TwoStageEdgeSolution(frozenset(X1), tuple(second), {"rounds": rounds})


def solve_mst(inst: MstInstance, seed: int = 0, method: str = "highs") -> TwoStageEdgeSolution:
    lp, oracle = mst_lp(inst)
    frac = solve_with_separation(lp, [oracle], method=method)
    if not frac.optimal:
        raise LpError(f"spanning LP is {frac.status}")
    sol = round_mst(inst, frac, seed)
    sol.info.update(lp_value=frac.objective_value, fractional=fractional_scenario_costs(inst, frac).tolist())
    return sol


# ------------------------------------------------------------------- Steiner


def steiner_lp(inst: SteinerInstance) -> LinearProgram:
    """Directed flow LP with shared first-stage flow that grows toward the root."""
    g = inst.graph
    E = g.m
    r = inst.root
    lp = LinearProgram()
    x1 = [lp.add_var(f"x1[{e}]") for e in range(E)]
    x2 = [[lp.add_var(f"x2[{s},{e}]") for e in range(E)] for s in range(inst.m)]
    # arc 2e goes u->v, arc 2e+1 goes v->u
    out_arcs: list[list[int]] = [[] for _ in range(g.n)]
    in_arcs: list[list[int]] = [[] for _ in range(g.n)]
    for e, (u, v, _) in enumerate(g.edges):
        out_arcs[u].append(2 * e)
        in_arcs[v].append(2 * e)
        out_arcs[v].append(2 * e + 1)
        in_arcs[u].append(2 * e + 1)

    all_terms = sorted(set().union(*inst.scenarios) - {r}) if inst.m else []
    r1 = {}
    for t in all_terms:
        r1[t] = [lp.add_var(f"r1[{t},{a}]") for a in range(2 * E)]
        for a in range(2 * E):
            lp.add_le({r1[t][a]: 1.0, x1[a // 2]: -1.0}, 0.0)
        for v in range(g.n):
            if v in (t, r):
                continue
            mono = {r1[t][a]: 1.0 for a in out_arcs[v]}
            for a in in_arcs[v]:
                mono[r1[t][a]] = mono.get(r1[t][a], 0.0) - 1.0
            lp.add_ge(mono, 0.0)

    for s in range(inst.m):
        for t in inst.terminals(s):
            r2 = [lp.add_var(f"r2[{s},{t},{a}]") for a in range(2 * E)]
            for a in range(2 * E):
                lp.add_le({r2[a]: 1.0, x2[s][a // 2]: -1.0}, 0.0)

            def net(v):
                coeffs = {}
                for a in out_arcs[v]:
                    coeffs[r1[t][a]] = coeffs.get(r1[t][a], 0.0) + 1.0
                    coeffs[r2[a]] = coeffs.get(r2[a], 0.0) + 1.0
                for a in in_arcs[v]:
                    coeffs[r1[t][a]] = coeffs.get(r1[t][a], 0.0) - 1.0
                    coeffs[r2[a]] = coeffs.get(r2[a], 0.0) - 1.0
                return coeffs

            lp.add_ge(net(t), 1.0)
            for v in range(g.n):
                if v not in (t, r):
                    lp.add_eq(net(v), 0.0)

    c = g.costs
    exprs = []
    for s in range(inst.m):
        coeffs = {x1[e]: c[e] for e in range(E)}
        coeffs.update({x2[s][e]: inst.inflation[s] * c[e] for e in range(E)})
        exprs.append(LinearExpr(coeffs))
    return encode_truncated_objective(exprs, inst.probs, lp)


def _prune_leaves(g: Graph, bought: set[int], removable: set[int], keep: set[int]) -> set[int]:
    # repeatedly drop removable edges hanging off a vertex nobody needs
    removable = set(removable) & bought
    changed = True
    while changed:
        changed = False
        deg = [0] * g.n
        for e in bought:
            u, v, _ = g.edges[e]
            deg[u] += 1
            deg[v] += 1
        for e in sorted(removable):
            u, v, _ = g.edges[e]
            if (deg[u] == 1 and u not in keep) or (deg[v] == 1 and v not in keep):
                bought.discard(e)
                removable.discard(e)
                deg[u] -= 1
                deg[v] -= 1
                changed = True
    return bought


def round_steiner(inst: SteinerInstance, frac: LpSolution, threshold: float = 0.25) -> TwoStageEdgeSolution:
    """Threshold rounding followed by nearest-terminal path completion."""
    g = inst.graph
    c = g.costs
    r = inst.root
    x1, x2 = _read_edge_vars(inst, frac)
    exact = _integral_solution(inst, x1, x2)
    if exact is not None:
        return exact

    picked = {e for e in range(g.m) if x1[e] >= threshold}
    near_root = reachable(g, r, set(range(g.m)) - picked)
    picked = {e for e in picked if g.edges[e][0] in near_root}
    X1 = set(kruskal(g, c, allowed=picked))
    every_terminal = set().union(*inst.scenarios) | {r} if inst.m else {r}
    X1 = _prune_leaves(g, X1, X1, every_terminal)

    second = []
    for s in range(inst.m):
        sigma = inst.inflation[s]
        X2 = {e for e in range(g.m) if x2[s][e] >= threshold} - X1
        while True:
            bought = X1 | X2
            comp = reachable(g, r, set(range(g.m)) - bought)
            missing = [t for t in inst.terminals(s) if t not in comp]
            if not missing:
                break
            w = [0.0 if e in bought else sigma * c[e] for e in range(g.m)]
            dist, pred = dijkstra(g, w, comp)
            t = min(missing, key=lambda v: (dist[v], v))
            if math.isinf(dist[t]):
                raise InfeasibleSolution(s, f"terminal {t} unreachable from the root")
            X2.update(e for e in path_edges(g, pred, comp, t) if e not in bought)
        comp = reachable(g, r, set(range(g.m)) - (X1 | X2))
        X2 = {e for e in X2 if g.edges[e][0] in comp}
        X2 = set(kruskal(g, c, initial=X1, allowed=X2))
        bought = _prune_leaves(g, X1 | X2, X2, inst.scenarios[s] | {r})
        second.append(frozenset(bought - X1))
    return TwoStageEdgeSolution(frozenset(X1), tuple(second))


def solve_steiner(inst: SteinerInstance, method: str = "highs") -> TwoStageEdgeSolution:
    frac = solve(steiner_lp(inst), method)
    if not frac.optimal:
        raise LpError(f"Steiner LP is {frac.status}")
    sol = round_steiner(inst, frac)
    sol.info.update(lp_value=frac.objective_value, fractional=fractional_scenario_costs(inst, frac).tolist())
    return sol


# ------------------------------------------------------------------- min-cut


def cut_costs(inst: MinCutInstance) -> list[float]:
    c = inst.graph.costs
    return [max_flow_min_cut(inst.graph, c, inst.root, {t})[0] for t in inst.terminals]


def mincut_lp(inst: MinCutInstance):
    """(LinearProgram, path-separation oracle, cut costs) of the relaxed LP.

    Scenario s costs sum_e c_e x_1(e) + sigma_s * cutcost_s * (1 - x_2^(s));
    rows sum_{e in P} x_1(e) >= x_2^(s) for r-t_s paths P are generated by
    shortest-path separation.
    """
    g = inst.graph
    c = g.costs
    cc = cut_costs(inst)
    lp = LinearProgram()
    x1 = [lp.add_var(f"x1[{e}]", hi=1.0) for e in range(g.m)]
    x2 = [lp.add_var(f"x2[{s}]", hi=1.0) for s in range(inst.m)]
    exprs = []
    for s in range(inst.m):
        k = inst.inflation[s] * cc[s]
        coeffs = {x1[e]: c[e] for e in range(g.m)}
        coeffs[x2[s]] = -k
        exprs.append(LinearExpr(coeffs, k))
    lp = encode_truncated_objective(exprs, inst.probs, lp)

    def oracle(point):
        w = [max(point[x1[e]], 0.0) for e in range(g.m)]
        dist, pred = dijkstra(g, w, inst.root)
        rows = []
        for s, t in enumerate(inst.terminals):
            if dist[t] < point[x2[s]] - SEP_TOL:
                coeffs = {x1[e]: 1.0 for e in path_edges(g, pred, inst.root, t)}
                coeffs[x2[s]] = -1.0
                rows.append(Row(coeffs, 0.0))
        return rows

    return lp, oracle, cc


def solve_mincut(inst: MinCutInstance, method: str = "highs") -> TwoStageEdgeSolution:
    """LP, then cut every terminal the LP separated to extent >= 1/2 in stage one."""
    g = inst.graph
    c = g.costs
    lp, oracle, cc = mincut_lp(inst)
    frac = solve_with_separation(lp, [oracle], method=method)
    if not frac.optimal:
        raise LpError(f"min-cut LP is {frac.status}")
    o2 = [frac.value(f"x2[{s}]") for s in range(inst.m)]
    U = {inst.terminals[s] for s in range(inst.m) if o2[s] >= 0.5 - 1e-9}
    X1 = max_flow_min_cut(g, c, inst.root, U)[1] if U else frozenset()
    second = tuple(max_flow_min_cut(g, c, inst.root, {t}, exclude=X1)[1] for t in inst.terminals)
    info = {"lp_value": frac.objective_value, "U": sorted(U), "o2": o2, "cut_costs": cc, "lp_rounds": frac.rounds}
    return TwoStageEdgeSolution(X1, second, info)
