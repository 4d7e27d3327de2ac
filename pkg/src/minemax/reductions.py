"""Hybrid (robust/stochastic blend) instances and their reduction to MinEMax.

A Hybrid instance pays rho * max_s cost_s + (1 - rho) * sum_s D(s) cost_s.
The reduction keeps every scenario twice: a robust copy that always
realizes with its second stage scaled by rho, and a stochastic copy that
realizes with probability D(s)/gamma with second stage scaled by
gamma (1 - rho).  Supported bases are the graph problems, whose per-scenario
cost splits linearly into a first-stage part and a second-stage part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graph_problems import (
    MinCutInstance,
    MstInstance,
    SteinerInstance,
    TwoStageEdgeSolution,
    evaluate_graph_solution,
)

DEFAULT_SLACK = 0.01
_BASES = (MinCutInstance, SteinerInstance, MstInstance)


@dataclass(frozen=True)
class HybridInstance:
    """``base`` supplies graph, scenarios and costs; its own probs are ignored."""

    base: object
    rho: float
    dist: tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.base, _BASES):
            raise TypeError(f"hybrid reduction needs a linear-cost base, got {type(self.base).__name__}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        D = tuple(float(x) for x in self.dist)
        if len(D) != self.base.m or any(x < 0 for x in D):
            raise ValueError("one nonnegative D(s) per scenario")
        if abs(math.fsum(D) - 1.0) > 1e-9:
            raise ValueError("D must sum to 1")
        object.__setattr__(self, "dist", D)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def m(self) -> int:
        return self.base.m


@dataclass(frozen=True)
class ReducedMinEMax:
    instance: object  # same type as the hybrid base, 2m scenarios
    gamma: float
    rho: float
    m: int

    @property
    def inflation_factor(self) -> float:
        """(1 - m/gamma)^-1, the price of interpreting back.

        At rho = 1 the stochastic copies cost only the first stage, so the
        reduction is exact.  gamma <= m gives no guarantee at all.
        """
        if self.rho >= 1.0:
            return 1.0
        if self.gamma <= self.m:
            return math.inf
        return 1.0 / (1.0 - self.m / self.gamma)


def first_stage_cost(base, X1) -> float:
    w = base.cost1 if isinstance(base, MstInstance) else base.graph.costs
    return math.fsum(w[e] for e in X1)


def second_stage_cost(base, X2, s: int) -> float:
    """ch2 of scenario s for the edge set X2."""
    if isinstance(base, MstInstance):
        return math.fsum(base.cost2[s][e] for e in X2)
    return base.inflation[s] * math.fsum(base.graph.costs[e] for e in X2)


def _element_costs(base, s: int) -> list[float]:
    if isinstance(base, MstInstance):
        return list(base.cost2[s])
    return [base.inflation[s] * c for c in base.graph.costs]


def choose_gamma(inst: HybridInstance, slack: float = DEFAULT_SLACK) -> float:
    """Scaling large enough that every stochastic copy outprices every robust one.

    gamma = max(m/slack, rho/(1-rho) * C_max/C_min + 1) where C_max is the
    priciest possible second stage (all elements, worst scenario) and C_min
    the cheapest nonzero element.  Second stages of cost zero are exempt.
    """
    if slack <= 0:
        raise ValueError("slack must be positive")
    if inst.rho >= 1.0:
        return 1.0
    floor = inst.m / slack
    per_scenario = [_element_costs(inst.base, s) for s in range(inst.m)]
    nonzero = [c for row in per_scenario for c in row if c > 0]
    if not nonzero:
        return floor
    c_max = max(math.fsum(row) for row in per_scenario)
    c_min = min(nonzero)
    return max(floor, inst.rho / (1.0 - inst.rho) * c_max / c_min + 1.0)


def hybrid_to_minemax(inst: HybridInstance, gamma: float) -> ReducedMinEMax:
    if gamma < 1.0:
        raise ValueError("gamma must be at least 1")
    b = inst.base
    m, rho = inst.m, inst.rho
    robust, stoch = rho, gamma * (1.0 - rho)
    probs = (1.0,) * m + tuple(d / gamma for d in inst.dist)
    if isinstance(b, MstInstance):
        cost2 = tuple(tuple(robust * c for c in row) for row in b.cost2) + tuple(tuple(stoch * c for c in row) for row in b.cost2)
        red = MstInstance(b.graph, b.cost1, cost2, probs)
    elif isinstance(b, SteinerInstance):
        infl = tuple(robust * x for x in b.inflation) + tuple(stoch * x for x in b.inflation)
        red = SteinerInstance(b.graph, b.root, b.scenarios + b.scenarios, infl, probs)
    else:
        infl = tuple(robust * x for x in b.inflation) + tuple(stoch * x for x in b.inflation)
        red = MinCutInstance(b.graph, b.root, b.terminals + b.terminals, infl, probs)
    return ReducedMinEMax(red, float(gamma), rho, m)


def lift(red: ReducedMinEMax, sol: TwoStageEdgeSolution) -> TwoStageEdgeSolution:
    """Use each original second stage for both of its copies."""
    return TwoStageEdgeSolution(sol.first_stage, tuple(sol.second_stage) * 2)


def interpret_back(red: ReducedMinEMax, base, sol: TwoStageEdgeSolution) -> TwoStageEdgeSolution:
    """Per original scenario keep whichever copy's second stage is cheaper (robust on ties)."""
    m = red.m
    if len(sol.second_stage) != 2 * m:
        raise ValueError(f"expected {2 * m} second-stage sets")
    chosen = []
    for s in range(m):
        a, b = sol.second_stage[s], sol.second_stage[m + s]
        chosen.append(a if second_stage_cost(base, a, s) <= second_stage_cost(base, b, s) else b)
    return TwoStageEdgeSolution(sol.first_stage, tuple(chosen))


def hybrid_value(costs, rho: float, dist) -> float:
    costs = np.asarray(costs, dtype=float)
    return float(rho * costs.max(initial=0.0) + (1.0 - rho) * (costs @ np.asarray(dist, dtype=float)))


def cost_hybrid(inst: HybridInstance, sol: TwoStageEdgeSolution) -> float:
    return hybrid_value(evaluate_graph_solution(inst.base, sol), inst.rho, inst.dist)


def copies_dominate(red: ReducedMinEMax, base, solutions) -> bool:
    """Check the gamma condition over every pair drawn from ``solutions``.

    Each element is (s, X2): a second-stage set for original scenario s.
    Pairs where either side has zero second-stage cost are skipped.
    """
    priced = [(second_stage_cost(base, X2, s)) for s, X2 in solutions]
    nonzero = [c for c in priced if c > 0]
    if not nonzero:
        return True
    stoch = red.gamma * (1.0 - red.rho) * min(nonzero)
    robust = red.rho * max(nonzero)
    return stoch > robust


def with_probs(base, probs):
    """Copy of ``base`` with its own scenario probabilities replaced."""
    return replace(base, probs=tuple(probs))
