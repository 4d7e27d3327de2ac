import math
from itertools import combinations

import numpy as np
import pytest

from minemax.core import InfeasibleSolution, expected_max_exact
from minemax.facility_problems import (
    KCenterInstance,
    KCenterSolution,
    UflInstance,
    UflSolution,
    check_metric,
    cluster_clients,
    evaluate_kcenter,
    evaluate_ufl,
    f_trunc,
    kcenter_search_bhat,
    kcenter_val,
    kmedian_brute_force,
    kmedian_cost,
    kmedian_local_search,
    metric_from_points,
    round_ufl,
    solve_kcenter,
    solve_ufl,
    ufl_lp,
)
from minemax.generators import clustered_metric, random_metric
from minemax.lp import solve
from minemax.oracle import brute_force_opt
from oracles import E_FACTOR, naive_kcenter_table, naive_opt, naive_ufl_table


def colocated(f1=1.0, f2=3.0, demand=1):
    return UflInstance(((0.0,),), ((demand,),), (f1,), ((f2,),), (1.0,))


def line(n):
    return tuple(tuple(float(abs(i - j)) for j in range(n)) for i in range(n))


# ---------------------------------------------------------------------- UFL


def test_colocated_ufl():
    inst = colocated()
    frac = solve(ufl_lp(inst))
    assert frac.objective_value == pytest.approx(1.0)
    sol = round_ufl(inst, frac)
    assert sol.first_stage_open == {0} and sol.second_stage_open == (frozenset(),)
    assert brute_force_opt(inst).opt_value == pytest.approx(1.0)


def test_no_demand_lp_is_zero():
    inst = colocated(demand=0)
    assert solve(ufl_lp(inst)).objective_value == pytest.approx(0.0)
    sol = solve_ufl(inst)
    # one facility must still open somewhere
    assert sol.first_stage_open or any(sol.second_stage_open)
    assert list(evaluate_ufl(inst, sol)) == [1.0]
    assert brute_force_opt(inst).opt_value == pytest.approx(1.0)


def test_unavailable_second_stage_forces_first():
    inst = colocated(f1=1.0, f2=math.inf)
    sol = solve_ufl(inst)
    assert sol.info["lp_value"] == pytest.approx(1.0)
    assert sol.first_stage_open == {0}


def test_evaluate_ufl_rejects_nothing_open():
    inst = colocated()
    with pytest.raises(InfeasibleSolution):
        evaluate_ufl(inst, UflSolution(set(), [set()]))


def test_bad_metric_rejected():
    with pytest.raises(ValueError):
        check_metric(np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]))


def ufl_corpus(count, **kw):
    params = dict(n=3, problem="ufl", m=3, facilities=3)
    params.update(kw)
    return [random_metric(seed=s, **params) for s in range(count)]


@pytest.mark.parametrize("seed", range(12))
def test_ufl_per_scenario_ratio(seed):
    inst = random_metric(n=2 + seed % 3, problem="ufl", m=2 + seed % 2, facilities=2 + seed % 3, seed=seed)
    sol = solve_ufl(inst)
    costs = evaluate_ufl(inst, sol)
    frac = np.array(sol.info["fractional"])
    assert np.all(costs <= 8 * frac + 1e-9)


@pytest.mark.parametrize("inst", ufl_corpus(6), ids=lambda i: "ufl")
def test_ufl_end_to_end_against_oracle(inst):
    sol = solve_ufl(inst)
    opt = brute_force_opt(inst).opt_value
    assert expected_max_exact(evaluate_ufl(inst, sol), inst.probs) <= 8 / E_FACTOR * opt + 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_ufl_oracle_matches_naive(seed):
    inst = random_metric(n=3, problem="ufl", m=2, facilities=3, seed=seed)
    table = naive_ufl_table(inst.distances, inst.demands, inst.f1, inst.f2)
    for objective in ("emax", "trunc"):
        assert brute_force_opt(inst, objective).opt_value == pytest.approx(naive_opt(table, inst.probs, objective))


def test_ufl_integral_point_unchanged():
    inst = colocated()
    frac = solve(ufl_lp(inst))
    assert round_ufl(inst, frac) == UflSolution({0}, [set()])


# ------------------------------------------------------------------ k-median


def test_kmedian_line():
    c = np.array(line(4))
    w = [1.0] * 4
    S = kmedian_local_search(c, w, range(4), range(4), 2)
    assert kmedian_cost(c, w, range(4), S) == pytest.approx(2.0)
    assert kmedian_brute_force(c, w, range(4), range(4), 2)[0] == pytest.approx(2.0)


def test_kmedian_trivial_cases():
    c = np.array(line(3))
    assert kmedian_local_search(c[:1, :1], [1.0], [0], [0], 1) == {0}
    assert kmedian_local_search(c, [0.0, 0.0, 5.0], range(3), range(3), 1) == {2}


@pytest.mark.parametrize("seed", range(8))
def test_kmedian_local_optimum(seed):
    inst = random_metric(n=7, problem="kcenter", k=3, seed=seed)
    c = inst.c
    w = np.random.default_rng(seed).uniform(0, 1, 7)
    S = kmedian_local_search(c, w, range(7), range(7), 3)
    base = kmedian_cost(c, w, range(7), S)
    for out in S:
        for cand in set(range(7)) - S:
            trial = (S - {out}) | {cand}
            assert kmedian_cost(c, w, range(7), trial) >= (1 - 1e-6) * base - 1e-12
    # single-swap optimum is within 5 of the best (known locality gap)
    assert base <= 5 * kmedian_brute_force(c, w, range(7), range(7), 3)[0] + 1e-9


# ------------------------------------------------------------------ k-center


def test_f_trunc_inclusive_at_threshold():
    assert list(f_trunc([1.0, 2.0, 3.0], 2.0)) == [0.0, 2.0, 3.0]


def test_evaluate_kcenter():
    inst = KCenterInstance(((0.0, 5.0), (5.0, 0.0)), 1, (1.0, 1.0))
    assert list(evaluate_kcenter(inst, KCenterSolution({0}))) == [0.0, 5.0]
    assert list(evaluate_kcenter(inst, KCenterSolution({1}))) == [5.0, 0.0]
    with pytest.raises(InfeasibleSolution):
        evaluate_kcenter(inst, KCenterSolution({0, 1}))
    with pytest.raises(InfeasibleSolution):
        evaluate_kcenter(inst, KCenterSolution(set()))


def test_star_metric_distances():
    # leaves at distance 3,2,4,9 from a hub: leaf-leaf distance is the sum
    hub = [0.0, 3.0, 2.0, 4.0, 9.0]
    c = tuple(tuple(0.0 if i == j else hub[i] + hub[j] for j in range(5)) for i in range(5))
    inst = KCenterInstance(c, 1, (1.0,) * 5)
    assert list(evaluate_kcenter(inst, KCenterSolution({0}))) == hub


def test_k_equals_n_costs_zero():
    inst = KCenterInstance(line(4), 4, (0.5,) * 4)
    sol = solve_kcenter(inst)
    assert not any(evaluate_kcenter(inst, sol))
    assert brute_force_opt(inst).opt_value == 0.0


def test_coincident_points():
    inst = KCenterInstance(((0.0,) * 3,) * 3, 1, (1.0, 0.5, 0.5))
    assert kcenter_search_bhat(inst) == 0.0
    assert kcenter_val(inst, 0.0)[0] == 0.0


def test_two_far_clusters():
    pts = [[0, 0], [0, 0], [100, 0], [100, 0]]
    inst = KCenterInstance(tuple(map(tuple, metric_from_points(pts).tolist())), 2, (0.5,) * 4)
    sol = solve_kcenter(inst)
    assert not any(evaluate_kcenter(inst, sol))


def test_line_bhat_and_val():
    inst = KCenterInstance(line(4), 1, (1.0,) * 4)
    opt = brute_force_opt(inst).opt_value
    assert opt == pytest.approx(2.0)
    Bhat = kcenter_search_bhat(inst, 0.1)
    assert Bhat == pytest.approx(1.58198, rel=1e-5)
    assert kcenter_val(inst, Bhat)[0] <= 3 / E_FACTOR * opt + 1e-9
    assert Bhat <= 1.1 * opt / E_FACTOR + 1e-9
    assert solve_kcenter(inst, 0.1).centers == {1}


def kcenter_corpus(count):
    out = []
    for s in range(count):
        gen = clustered_metric if s % 2 else random_metric
        out.append(gen(n=5 + s % 3, problem="kcenter", k=1 + s % 3, seed=s))
    return out


@pytest.mark.parametrize("inst", kcenter_corpus(10), ids=lambda i: f"n{i.n}k{i.k}")
def test_kcenter_guarantees(inst):
    eps = 0.25
    sol = solve_kcenter(inst, eps)
    opt = brute_force_opt(inst).opt_value
    costs = evaluate_kcenter(inst, sol)
    emax = expected_max_exact(costs, inst.probs)
    info = sol.info
    Bhat = info["Bhat"]
    c = inst.c
    assert info["val"] <= 3 / E_FACTOR * opt + 1e-9
    assert Bhat <= (1 + eps) * opt / E_FACTOR + 1e-9
    reps = info["representatives"]
    for a, b in combinations(reps, 2):
        assert c[a, b] > 2 * Bhat
    assert math.fsum(info["weights"]) == pytest.approx(math.fsum(inst.probs), abs=1e-12)
    assert info["val_folded"] <= info["val"] + 1e-9
    assert emax <= info["kmedian_cost"] + 4 * Bhat + 1e-9
    assert emax <= 57 * opt + 1e-9


def test_cluster_clients_folds_nearby():
    c = np.array(line(3))
    P, sigma = cluster_clients(c, [0.2, 0.3, 0.4], [0.0, 0.1, 0.2], 0.5)
    assert list(P) == [0.5, 0.0, 0.4] and sigma == [0, 0, 2]


@pytest.mark.parametrize("seed", range(4))
def test_kcenter_oracle_matches_naive(seed):
    inst = random_metric(n=6, problem="kcenter", k=2, seed=seed)
    table = naive_kcenter_table(inst.distances, inst.k)
    assert brute_force_opt(inst).opt_value == pytest.approx(naive_opt(table, inst.probs))
    assert brute_force_opt(inst, "trunc").opt_value == pytest.approx(naive_opt(table, inst.probs, "trunc"))
