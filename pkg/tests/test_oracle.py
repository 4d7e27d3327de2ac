import numpy as np
import pytest

from minemax.core import expected_max_exact, truncated_value
from minemax.facility_problems import KCenterInstance, evaluate_kcenter, evaluate_ufl
from minemax.generators import random_graph, random_metric, star
from minemax.graph_problems import MinCutInstance, SteinerInstance, evaluate_graph_solution
from minemax.graphs import Graph
from minemax.oracle import ELEMENT_CAP, OracleCapExceeded, brute_force_opt, exact_second_stage, objective_values, solution_table
from oracles import E_FACTOR


def evaluate(inst, sol):
    if hasattr(inst, "demands"):
        return evaluate_ufl(inst, sol)
    if isinstance(inst, KCenterInstance):
        return evaluate_kcenter(inst, sol)
    return evaluate_graph_solution(inst, sol)


def small_instances():
    out = [star()]
    out += [random_graph(n=6, m=3, problem=p, max_edges=8, seed=s) for p in ("mincut", "steiner", "mst") for s in range(3)]
    out += [random_metric(n=3, problem="ufl", m=3, facilities=3, seed=s) for s in range(3)]
    out += [random_metric(n=6, problem="kcenter", k=2, seed=s) for s in range(3)]
    return out


def test_single_edge_mincut():
    inst = MinCutInstance(Graph(2, ((0, 1, 1.0),)), 0, (1,), (2.0,), (1.0,))
    assert brute_force_opt(inst).opt_value == 1.0
    assert exact_second_stage(inst, set(), 0) == (2.0, frozenset({0}))
    assert exact_second_stage(inst, {0}, 0) == (0.0, frozenset())


def test_path_steiner_second_stage():
    inst = SteinerInstance(Graph(2, ((0, 1, 1.0),)), 0, (frozenset({1}),), (2.0,), (1.0,))
    assert exact_second_stage(inst, set(), 0) == (2.0, frozenset({0}))


def test_kcenter_has_no_second_stage():
    inst = random_metric(n=4, problem="kcenter", k=4, seed=0)
    assert brute_force_opt(inst).opt_value == 0.0
    assert exact_second_stage(inst, {0}, 1) == (0.0, frozenset())


def test_star_regression_constant():
    res = brute_force_opt(star())
    assert res.opt_value == pytest.approx(13.82)
    assert res.opt_solution.first_stage == {1, 3}


@pytest.mark.parametrize("inst", small_instances(), ids=lambda i: type(i).__name__)
def test_result_reevaluates(inst):
    for objective, f in (("emax", expected_max_exact), ("trunc", truncated_value)):
        res = brute_force_opt(inst, objective)
        costs = evaluate(inst, res.opt_solution)
        assert f(costs, inst.probs) == pytest.approx(res.opt_value, abs=1e-9)


@pytest.mark.parametrize("inst", small_instances(), ids=lambda i: type(i).__name__)
def test_sandwich_over_every_enumerated_solution(inst):
    _, costs = solution_table(inst)
    costs = costs[np.all(np.isfinite(costs), axis=1)]
    em = objective_values(costs, inst.probs, "emax")
    tr = objective_values(costs, inst.probs, "trunc")
    assert np.all(em <= tr * (1 + 1e-9) + 1e-12)
    assert np.all(E_FACTOR * tr <= em * (1 + 1e-9) + 1e-12)


@pytest.mark.parametrize("inst", small_instances(), ids=lambda i: type(i).__name__)
def test_trunc_optimum_transfers(inst):
    t_sol = brute_force_opt(inst, "trunc").opt_solution
    opt = brute_force_opt(inst, "emax").opt_value
    assert expected_max_exact(evaluate(inst, t_sol), inst.probs) <= opt / E_FACTOR + 1e-9


@pytest.mark.parametrize("inst", small_instances()[:10], ids=lambda i: type(i).__name__)
def test_second_stage_completion_agrees(inst):
    keys, costs = solution_table(inst)
    for key in keys[:: max(1, len(keys) // 16)]:
        X1 = frozenset(i for i in range(key.bit_length()) if key >> i & 1)
        w1 = inst.cost1 if hasattr(inst, "cost1") else (inst.f1 if hasattr(inst, "f1") else inst.graph.costs)
        for s in range(inst.m):
            value, _ = exact_second_stage(inst, X1, s)
            assert sum(w1[e] for e in X1) + value == pytest.approx(costs[key, s])


def test_caps():
    n = ELEMENT_CAP + 2
    g = Graph(n, tuple((i, i + 1, 1.0) for i in range(n - 1)))
    inst = MinCutInstance(g, 0, (n - 1,), (1.0,), (1.0,))
    with pytest.raises(OracleCapExceeded):
        brute_force_opt(inst)
    many = MinCutInstance(Graph(2, ((0, 1, 1.0),)), 0, (1,) * 13, (1.0,) * 13, (0.5,) * 13)
    with pytest.raises(OracleCapExceeded):
        brute_force_opt(many)


def test_unknown_objective():
    with pytest.raises(ValueError):
        brute_force_opt(star(), "hybrid")
