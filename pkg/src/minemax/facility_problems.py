"""MinEMax uncapacitated facility location and single-client k-center."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import E_FACTOR, InfeasibleSolution, truncated_value
from .lp import LinearExpr, LinearProgram, LpError, LpSolution, encode_truncated_objective, solve

METRIC_TOL = 1e-9
INTEGRAL_TOL = 1e-7


def metric_from_points(points) -> np.ndarray:
    """Euclidean distance matrix between rows of ``points``."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    diff = P[:, None, :] - P[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def check_metric(c: np.ndarray, tol: float = METRIC_TOL) -> None:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("metric must be a square matrix")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("distances must be finite and nonnegative")
    scale = max(1.0, float(c.max(initial=0.0)))
    if np.any(np.abs(c - c.T) > tol * scale) or np.any(np.abs(np.diag(c)) > tol * scale):
        raise ValueError("metric must be symmetric with zero diagonal")
    # c[i,k] <= c[i,j] + c[j,k] for every j
    via = (c[:, :, None] + c[None, :, :]).min(axis=1)
    if np.any(c > via + tol * scale):
        raise ValueError("triangle inequality violated")


def check_bipartite_metric(c: np.ndarray, tol: float = METRIC_TOL) -> None:
    """Facility x client distances that extend to a metric: c_ij <= c_ij' + c_i'j' + c_i'j."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2:
        raise ValueError("distance table must be facilities x clients")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("distances must be finite and nonnegative")
    scale = max(1.0, float(c.max(initial=0.0)))
    # best detour i -> j' -> i' -> j over all (i', j')
    via = np.min(c[:, :, None, None] + c.T[None, :, :, None] + c[None, None, :, :], axis=(1, 2))
    if np.any(c > via + tol * scale):
        raise ValueError("triangle inequality violated")


# ----------------------------------------------------------------------- UFL


@dataclass(frozen=True)
class UflInstance:
    """Facilities x clients distances, 0/1 demands per scenario, open costs.

    ``math.inf`` in an open-cost entry means that option is unavailable.
    """

    distances: tuple[tuple[float, ...], ...]
    demands: tuple[tuple[int, ...], ...]
    f1: tuple[float, ...]
    f2: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.distances, dtype=float)
        if c.ndim != 2:
            raise ValueError("distances must be a facilities x clients table")
        nf, nc = c.shape
        check_bipartite_metric(c)
        demands = tuple(tuple(int(d) for d in row) for row in self.demands)
        m = len(demands)
        if any(len(row) != nc or any(d not in (0, 1) for d in row) for row in demands):
            raise ValueError("demands must be 0/1 rows, one entry per client")
        f1 = tuple(float(x) for x in self.f1)
        f2 = tuple(tuple(float(x) for x in row) for row in self.f2)
        if len(f1) != nf or len(f2) != m or any(len(row) != nf for row in f2):
            raise ValueError("open costs must be facility-aligned, one f2 row per scenario")
        if any(x < 0 for x in f1) or any(x < 0 for row in f2 for x in row):
            raise ValueError("open costs must be nonnegative")
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != m or any(not 0 <= p <= 1 for p in probs):
            raise ValueError("one probability in [0, 1] per scenario")
        object.__setattr__(self, "distances", tuple(tuple(r) for r in c.tolist()))
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)
        object.__setattr__(self, "probs", probs)

    @property
    def nf(self) -> int:
        return len(self.f1)

    @property
    def nc(self) -> int:
        return len(self.distances[0]) if self.distances else 0

    @property
    def m(self) -> int:
        return len(self.demands)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.distances, dtype=float)

    def clients(self, s: int) -> list[int]:
        return [j for j, d in enumerate(self.demands[s]) if d]


@dataclass(frozen=True)
class UflSolution:
    first_stage_open: frozenset
    second_stage_open: tuple[frozenset, ...]
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "first_stage_open", frozenset(self.first_stage_open))
        object.__setattr__(self, "second_stage_open", tuple(frozenset(x) for x in self.second_stage_open))


def ufl_scenario_cost(inst: UflInstance, X1, X2, s: int) -> float:
    opened = set(X1) | set(X2)
    clients = inst.clients(s)
    if clients and not opened:
        return math.inf
    c = inst.c
    cost = math.fsum(inst.f1[i] for i in X1) + math.fsum(inst.f2[s][i] for i in X2)
    idx = sorted(opened)
    return cost + math.fsum(float(c[idx, j].min()) for j in clients)


def evaluate_ufl(inst: UflInstance, sol: UflSolution) -> np.ndarray:
    if len(sol.second_stage_open) != inst.m:
        raise ValueError(f"expected {inst.m} second-stage sets")
    if not sol.first_stage_open and not any(sol.second_stage_open):
        raise InfeasibleSolution(0, "no facility opened anywhere")
    out = np.empty(inst.m)
    for s in range(inst.m):
        out[s] = ufl_scenario_cost(inst, sol.first_stage_open, sol.second_stage_open[s], s)
        if not math.isfinite(out[s]):
            raise InfeasibleSolution(s, "demand with no open facility, or an unavailable facility opened")
    return out


def ufl_lp(inst: UflInstance) -> LinearProgram:
    c = inst.c
    lp = LinearProgram()
    x1 = [lp.add_var(f"x1[{i}]", hi=0.0 if math.isinf(inst.f1[i]) else math.inf) for i in range(inst.nf)]
    x2 = [[lp.add_var(f"x2[{s},{i}]", hi=0.0 if math.isinf(inst.f2[s][i]) else math.inf) for i in range(inst.nf)] for s in range(inst.m)]
    exprs = []
    for s in range(inst.m):
        coeffs = {x1[i]: inst.f1[i] for i in range(inst.nf) if math.isfinite(inst.f1[i])}
        coeffs.update({x2[s][i]: inst.f2[s][i] for i in range(inst.nf) if math.isfinite(inst.f2[s][i])})
        for j in inst.clients(s):
            z = [lp.add_var(f"z[{s},{i},{j}]") for i in range(inst.nf)]
            lp.add_ge({z[i]: 1.0 for i in range(inst.nf)}, 1.0)
            for i in range(inst.nf):
                lp.add_le({z[i]: 1.0, x1[i]: -1.0, x2[s][i]: -1.0}, 0.0)
                coeffs[z[i]] = c[i, j]
        exprs.append(LinearExpr(coeffs))
    return encode_truncated_objective(exprs, inst.probs, lp)


def _natural_assignment(c_col: np.ndarray, y: np.ndarray) -> np.ndarray:
    # send one unit of demand to the nearest fractionally open facilities
    z = np.zeros_like(y)
    need = 1.0
    for i in np.argsort(c_col, kind="stable"):
        if need <= 0:
            break
        take = min(max(y[i], 0.0), need)
        z[i] = take
        need -= take
    return z


def ufl_fractional_costs(inst: UflInstance, frac: LpSolution) -> np.ndarray:
    """cost(x_1, x_2^(s)) per scenario with the nearest-facility fractional assignment."""
    c = inst.c
    x1 = np.array([frac.value(f"x1[{i}]") for i in range(inst.nf)])
    out = np.empty(inst.m)
    for s in range(inst.m):
        x2 = np.array([frac.value(f"x2[{s},{i}]") for i in range(inst.nf)])
        f1 = np.where(np.isfinite(inst.f1), inst.f1, 0.0)
        f2 = np.where(np.isfinite(inst.f2[s]), inst.f2[s], 0.0)
        total = x1 @ f1 + x2 @ f2
        for j in inst.clients(s):
            total += _natural_assignment(c[:, j], x1 + x2) @ c[:, j]
        out[s] = total
    return out


def _cheapest_fallback(inst: UflInstance) -> UflSolution:
    # no demand at all, but the feasibility rule still wants one open facility
    options = []
    for i in range(inst.nf):
        if math.isfinite(inst.f1[i]):
            options.append(UflSolution({i}, [set()] * inst.m))
        for s in range(inst.m):
            if math.isfinite(inst.f2[s][i]):
                X2 = [set() for _ in range(inst.m)]
                X2[s] = {i}
                options.append(UflSolution(set(), X2))
    if not options:
        raise InfeasibleSolution(0, "every facility is unavailable")
    return min(options, key=lambda sol: truncated_value(evaluate_ufl(inst, sol), inst.probs))


def round_ufl(inst: UflInstance, frac: LpSolution) -> UflSolution:
    """Filtering and clustering rounding.

    Each demand pair (j, s) gets its fractional connection cost C and the
    ball of facilities within 2C.  Inside the ball at least half a unit of
    assignment is served, so either the first-stage or the scenario's own
    facilities carry a quarter of it; the pair is typed accordingly.
    First-stage pairs are clustered across all scenarios, second-stage pairs
    within their scenario, both in ascending C with disjoint balls, and each
    cluster center opens the cheapest facility of the right stage in its
    ball.
    """
    c = inst.c
    nf = inst.nf
    x1 = np.array([frac.value(f"x1[{i}]") for i in range(nf)])
    x2 = np.array([[frac.value(f"x2[{s},{i}]") for i in range(nf)] for s in range(inst.m)])

    vals = np.concatenate([x1, x2.ravel()])
    if np.all(np.abs(vals - np.round(vals)) <= INTEGRAL_TOL):
        sol = UflSolution(set(np.flatnonzero(x1 > 0.5).tolist()), [set(np.flatnonzero(r > 0.5).tolist()) for r in x2])
        try:
            evaluate_ufl(inst, sol)
            return sol
        except InfeasibleSolution:
            pass

    first_pairs, second_pairs = [], [[] for _ in range(inst.m)]
    for s in range(inst.m):
        y = x1 + x2[s]
        for j in inst.clients(s):
            z = _natural_assignment(c[:, j], y)
            C = float(z @ c[:, j])
            ball = np.flatnonzero(c[:, j] <= 2.0 * C + METRIC_TOL)
            first_mass = float(np.minimum(x1[ball], z[ball]).sum())
            if first_mass >= 0.25 - INTEGRAL_TOL:
                first_pairs.append((C, s, j, ball))
            else:
                second_pairs[s].append((C, s, j, ball))

    def cluster(pairs, price):
        opened = set()
        taken = np.zeros(nf, dtype=bool)
        for C, s, j, ball in sorted(pairs, key=lambda t: (t[0], t[1], t[2])):
            if taken[ball].any():
                continue
            taken[ball] = True
            cands = [i for i in ball if math.isfinite(price(s, i))]
            if cands:
                opened.add(min(cands, key=lambda i: (price(s, i), i)))
        return opened

    X1 = cluster(first_pairs, lambda s, i: inst.f1[i])
    X2 = [cluster(second_pairs[s], lambda s_, i: inst.f2[s_][i]) - X1 for s in range(inst.m)]
    sol = UflSolution(X1, X2)
    if not X1 and not any(X2):
        return _cheapest_fallback(inst)
    return sol


def solve_ufl(inst: UflInstance, method: str = "highs") -> UflSolution:
    frac = solve(ufl_lp(inst), method)
    if not frac.optimal:
        raise LpError(f"UFL LP is {frac.status}")
    sol = round_ufl(inst, frac)
    sol.info.update(lp_value=frac.objective_value, fractional=ufl_fractional_costs(inst, frac).tolist())
    return sol


# ------------------------------------------------------------------ k-center


@dataclass(frozen=True)
class KCenterInstance:
    """Points with a metric; scenario s is the single client s."""

    distances: tuple[tuple[float, ...], ...]
    k: int
    probs: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.distances, dtype=float)
        check_metric(c)
        if self.k < 1:
            raise ValueError("k must be at least 1")
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != c.shape[0] or any(not 0 <= p <= 1 for p in probs):
            raise ValueError("one probability in [0, 1] per point")
        object.__setattr__(self, "distances", tuple(tuple(r) for r in c.tolist()))
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.distances)

    @property
    def m(self) -> int:
        return self.n

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.distances, dtype=float)


@dataclass(frozen=True)
class KCenterSolution:
    centers: frozenset
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "centers", frozenset(self.centers))


def evaluate_kcenter(inst: KCenterInstance, sol: KCenterSolution) -> np.ndarray:
    X = sorted(sol.centers)
    if len(X) > inst.k:
        raise InfeasibleSolution(0, f"{len(X)} centers exceed k={inst.k}")
    if not X:
        raise InfeasibleSolution(0, "no centers")
    return inst.c[X, :].min(axis=0)


def f_trunc(d, B: float):
    """d where d >= B, else 0."""
    d = np.asarray(d, dtype=float)
    return np.where(d >= B, d, 0.0)


def kcenter_lp(inst: KCenterInstance, B: float) -> LinearProgram:
    n = inst.n
    fc = f_trunc(inst.c, B)
    lp = LinearProgram()
    x = [lp.add_var(f"x[{i}]") for i in range(n)]
    obj = {}
    for s in range(n):
        z = [lp.add_var(f"z[{i},{s}]") for i in range(n)]
        lp.add_ge({zi: 1.0 for zi in z}, 1.0)
        for i in range(n):
            lp.add_le({z[i]: 1.0, x[i]: -1.0}, 0.0)
            if inst.probs[s] and fc[i, s]:
                obj[z[i]] = inst.probs[s] * fc[i, s]
    lp.add_le({xi: 1.0 for xi in x}, float(inst.k))
    lp.set_objective(obj)
    return lp


def kcenter_val(inst: KCenterInstance, B: float, method: str = "highs") -> tuple[float, LpSolution]:
    sol = solve(kcenter_lp(inst, B), method)
    if not sol.optimal:
        raise LpError(f"k-center LP is {sol.status}")
    return max(sol.objective_value, 0.0), sol


def kcenter_search_bhat(inst: KCenterInstance, epsilon: float = 0.25, method: str = "highs") -> float:
    """Smallest grid threshold whose LP value passes the 3/(1-1/e) test.

    The grid is L(1+eps)^i where L = val(0)/n bounds the optimum from
    below (every scenario alone contributes p_s d(X,s) to the expected
    maximum).  val(0) = 0 means the optimum is 0 and we return 0.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    v0, _ = kcenter_val(inst, 0.0, method)
    if v0 <= 1e-12:
        return 0.0
    L = v0 / inst.n
    maxd = float(inst.c.max())
    cap = int(math.ceil(math.log(max(maxd, L) / L) / math.log1p(epsilon))) + 2
    for i in range(cap + 1):
        Bbar = L * (1.0 + epsilon) ** i
        Bhat = Bbar / E_FACTOR
        if kcenter_val(inst, Bhat, method)[0] <= 3.0 * Bhat * (1 + 1e-9):
            return Bhat
    raise LpError("search overflow")


def cluster_clients(c: np.ndarray, probs: Sequence[float], scores: Sequence[float], Bhat: float):
    """Fold probability mass onto far-apart representatives.

    Returns (weights P, sigma) with sigma[s] the representative of s.
    """
    n = len(probs)
    P = np.zeros(n)
    sigma = list(range(n))
    for s in sorted(range(n), key=lambda s: (scores[s], s)):
        home = None
        for t in range(n):
            if P[t] > 0 and c[s, t] <= 2.0 * Bhat:
                home = t
                break
        if home is None:
            P[s] = probs[s]
        else:
            P[home] += probs[s]
            sigma[s] = home
    return P, sigma


def kmedian_cost(c: np.ndarray, weights, clients, centers) -> float:
    if not centers:
        return math.inf
    cl = list(clients)
    w = np.asarray([weights[j] for j in cl])
    return float(w @ c[np.ix_(sorted(centers), cl)].min(axis=0))


def kmedian_local_search(c: np.ndarray, weights, clients, candidates, k: int, rel_tol: float = 1e-6) -> frozenset:
    """Greedy start, then single swaps while one improves by more than rel_tol."""
    clients = list(clients)
    candidates = sorted(candidates)
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(candidates) <= k:
        return frozenset(candidates)
    S: list[int] = []
    for _ in range(k):
        best = min((i for i in candidates if i not in S), key=lambda i: (kmedian_cost(c, weights, clients, S + [i]), i))
        S.append(best)
    cost = kmedian_cost(c, weights, clients, S)
    improved = True
    while improved and cost > 0:
        improved = False
        for out in list(S):
            for cand in candidates:
                if cand in S:
                    continue
                trial = [cand if i == out else i for i in S]
                tc = kmedian_cost(c, weights, clients, trial)
                if tc < (1.0 - rel_tol) * cost:
                    S, cost, improved = trial, tc, True
                    break
            if improved:
                break
    return frozenset(S)


def solve_kcenter(inst: KCenterInstance, epsilon: float = 0.25, method: str = "highs") -> KCenterSolution:
    c = inst.c
    if inst.k >= inst.n:
        return KCenterSolution(range(inst.n), {"Bhat": 0.0})
    Bhat = kcenter_search_bhat(inst, epsilon, method)
    val, lpsol = kcenter_val(inst, Bhat, method)
    fc = f_trunc(c, Bhat)
    z = np.array([[lpsol.value(f"z[{i},{s}]") for s in range(inst.n)] for i in range(inst.n)])
    scores = (fc * z).sum(axis=0)
    P, sigma = cluster_clients(c, inst.probs, scores, Bhat)
    reps = [s for s in range(inst.n) if P[s] > 0]
    if not reps:
        # every probability is zero, so any single point is optimal
        return KCenterSolution({0}, {"Bhat": Bhat, "val": val})
    X = kmedian_local_search(c, P, reps, reps, inst.k)
    info = {
        "Bhat": Bhat,
        "val": val,
        "val_folded": float(P @ scores),
        "representatives": reps,
        "weights": P.tolist(),
        "kmedian_cost": kmedian_cost(c, P, reps, X),
    }
    return KCenterSolution(X, info)


def kmedian_brute_force(c: np.ndarray, weights, clients, candidates, k: int) -> tuple[float, frozenset]:
    best = (math.inf, frozenset())
    cands = sorted(candidates)
    for r in range(1, min(k, len(cands)) + 1):
        for S in combinations(cands, r):
            v = kmedian_cost(c, weights, clients, S)
            if v < best[0]:
                best = (v, frozenset(S))
    return best
