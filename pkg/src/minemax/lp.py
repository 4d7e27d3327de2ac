"""Minimization LPs with >= rows, variable bounds and lazy row generation.

Variables are addressed by integer index; names are optional but every
problem module in this package names its variables (``"x1[3]"``,
``"t[0]"``) so solutions can be read back with :meth:`LpSolution.value`.

Two backends are available: HiGHS through scipy (default, sparse) and a
small dense revised simplex (``method="simplex"``) used to cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import _simplex
from .core import ScenarioDistribution

FEAS_TOL = 1e-7
OPT_TOL = 1e-7


class LpError(RuntimeError):
    """Numerical failure or non-convergence."""


@dataclass(frozen=True)
class Row:
    """a.x >= rhs with a stored sparsely as {var index: coefficient}."""

    coeffs: Mapping[int, float]
    rhs: float

    def activity(self, x) -> float:
        return math.fsum(a * x[j] for j, a in self.coeffs.items())

    def violation(self, x) -> float:
        return self.rhs - self.activity(x)


@dataclass(frozen=True)
class LinearExpr:
    """Affine expression sum_j coeffs[j] x_j + const."""

    coeffs: Mapping[int, float] = field(default_factory=dict)
    const: float = 0.0

    def value(self, x) -> float:
        return self.const + math.fsum(a * x[j] for j, a in self.coeffs.items())


class LinearProgram:
    def __init__(self):
        self.names: list[str] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.objective: dict[int, float] = {}
        self.obj_const = 0.0
        self.rows: list[Row] = []
        self._by_name: dict[str, int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str | None = None, lo: float = 0.0, hi: float = math.inf, obj: float = 0.0) -> int:
        if not lo <= hi:
            raise ValueError(f"empty bounds [{lo}, {hi}] for {name}")
        if lo == -math.inf:
            raise ValueError("free variables are not supported")
        j = len(self.names)
        name = name if name is not None else f"v{j}"
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name}")
        self.names.append(name)
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self._by_name[name] = j
        if obj:
            self.objective[j] = float(obj)
        return j

    def index(self, name: str) -> int:
        return self._by_name[name]

    def _check(self, coeffs):
        for j in coeffs:
            if not 0 <= j < self.num_vars:
                raise IndexError(f"variable index {j} out of range")

    def add_ge(self, coeffs: Mapping[int, float], rhs: float) -> None:
        self._check(coeffs)
        self.rows.append(Row({int(j): float(a) for j, a in coeffs.items() if a != 0.0}, float(rhs)))

    def add_le(self, coeffs: Mapping[int, float], rhs: float) -> None:
        self.add_ge({j: -a for j, a in coeffs.items()}, -rhs)

    def add_eq(self, coeffs: Mapping[int, float], rhs: float) -> None:
        self.add_ge(coeffs, rhs)
        self.add_le(coeffs, rhs)

    def set_objective(self, coeffs: Mapping[int, float], const: float = 0.0) -> None:
        self._check(coeffs)
        self.objective = {int(j): float(a) for j, a in coeffs.items() if a != 0.0}
        self.obj_const = float(const)

    def copy(self) -> "LinearProgram":
        new = LinearProgram()
        new.names = list(self.names)
        new.lo = list(self.lo)
        new.hi = list(self.hi)
        new.objective = dict(self.objective)
        new.obj_const = self.obj_const
        new.rows = list(self.rows)
        new._by_name = dict(self._by_name)
        return new

    def with_rows(self, rows: Iterable[Row]) -> "LinearProgram":
        new = self.copy()
        for r in rows:
            new.add_ge(r.coeffs, r.rhs)
        return new

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def matrix(self):
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, a in row.coeffs.items():
                ri.append(i)
                ci.append(j)
                data.append(a)
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(self.rows), self.num_vars))
        b = np.array([r.rhs for r in self.rows])
        return A, b

    def dump(self) -> str:
        """Plain-text listing, one constraint per line.  Debug aid only."""

        def fmt(coeffs):
            terms = [f"{a:+g} {self.names[j]}" for j, a in sorted(coeffs.items())]
            return " ".join(terms) if terms else "0"

        lines = [f"min {fmt(self.objective)} {self.obj_const:+g}"]
        lines += [f"{fmt(r.coeffs)} >= {r.rhs:g}" for r in self.rows]
        for j, name in enumerate(self.names):
            lines.append(f"{self.lo[j]:g} <= {name} <= {self.hi[j]:g}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: str
    values: np.ndarray | None = None
    objective_value: float | None = None
    duals: np.ndarray | None = None
    names: Sequence[str] = ()
    rounds: int = 0
    lp: LinearProgram | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, name: str) -> float:
        return float(self.values[self.lp.index(name)])


Oracle = Callable[[np.ndarray], "Row | Sequence[Row] | None"]


def _solve_highs(lp: LinearProgram):
    A, b = lp.matrix()
    c = lp.objective_vector()
    bounds = [(lo, None if math.isinf(hi) else hi) for lo, hi in zip(lp.lo, lp.hi)]
    kw = {}
    if lp.rows:
        kw = dict(A_ub=-A, b_ub=-b)
    res = linprog(c, bounds=bounds, method="highs", **kw)
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    if res.status != 0:
        raise LpError(f"solver stalled ({res.message})")
    duals = -np.asarray(res.ineqlin.marginals) if lp.rows else np.zeros(0)
    return "optimal", np.asarray(res.x, dtype=float), duals


def _solve_simplex(lp: LinearProgram):
    n = lp.num_vars
    lo = np.array(lp.lo)
    hi = np.array(lp.hi)
    A, b = lp.matrix()
    A = A.toarray()
    ub = np.flatnonzero(np.isfinite(hi))
    k, u = A.shape[0], len(ub)
    # x = lo + x';  A x' - s = b - A lo;  x'_j + w_j = hi_j - lo_j
    S = np.zeros((k + u, n + k + u))
    S[:k, :n] = A
    S[:k, n : n + k] = -np.eye(k)
    rhs = np.empty(k + u)
    rhs[:k] = b - A @ lo
    for r, j in enumerate(ub):
        S[k + r, j] = 1.0
        S[k + r, n + k + r] = 1.0
        rhs[k + r] = hi[j] - lo[j]
    c = np.concatenate([lp.objective_vector(), np.zeros(k + u)])
    try:
        status, x, y = _simplex.solve_standard(S, rhs, c)
    except _simplex.SimplexStalled as exc:
        raise LpError("solver stalled") from exc
    if status != "optimal":
        return status, None, None
    return "optimal", lo + x[:n], y[:k]


def solve(lp: LinearProgram, method: str = "highs") -> LpSolution:
    """Optimal basic solution, or an infeasible/unbounded status."""
    if method == "highs":
        status, x, duals = _solve_highs(lp)
    elif method == "simplex":
        status, x, duals = _solve_simplex(lp)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if status != "optimal":
        return LpSolution(status, names=lp.names, lp=lp)
    x = np.clip(x, lp.lo, lp.hi)
    for row in lp.rows:
        if row.violation(x) > 1e-6 * max(1.0, abs(row.rhs)):
            raise LpError("solver stalled (returned point violates a row)")
    obj = float(lp.objective_vector() @ x) + lp.obj_const
    return LpSolution("optimal", x, obj, duals, lp.names, lp=lp)


def _as_rows(found) -> list[Row]:
    if found is None:
        return []
    if isinstance(found, Row):
        return [found]
    return list(found)


def solve_with_separation(lp: LinearProgram, oracles: Sequence[Oracle], max_rounds: int = 500, method: str = "highs", tol: float = FEAS_TOL) -> LpSolution:
    """Cutting-plane loop: solve, ask every oracle for violated rows, repeat.

    Rows an oracle returns that are not actually violated by more than
    ``tol`` are dropped, so a sloppy oracle cannot loop forever.
    """
    current = lp
    for rnd in range(max_rounds):
        sol = solve(current, method)
        if not sol.optimal:
            sol.rounds = rnd + 1
            return sol
        cuts = []
        for oracle in oracles:
            for row in _as_rows(oracle(sol.values)):
                if row.violation(sol.values) > tol:
                    cuts.append(row)
        if not cuts:
            sol.rounds = rnd + 1
            return sol
        current = current.with_rows(cuts)
    raise LpError("cut generation did not converge")


def encode_truncated_objective(exprs: Sequence[LinearExpr], dist, lp: LinearProgram, keep_objective: bool = False) -> LinearProgram:
    """Copy of ``lp`` whose objective is the truncated sum of ``exprs``.

    Adds B >= 0 and t_s >= 0 with rows t_s + B - expr_s >= 0 and minimizes
    B + sum_s p_s t_s.  Works unchanged when sum p < 1 (the missing mass acts
    like a zero-cost dummy scenario).
    """
    probs = dist.probs if isinstance(dist, ScenarioDistribution) else tuple(float(p) for p in dist)
    if len(probs) != len(exprs):
        raise ValueError("one expression per scenario required")
    new = lp.copy()
    obj = dict(new.objective) if keep_objective else {}
    B = new.add_var("B")
    obj[B] = obj.get(B, 0.0) + 1.0
    for s, (expr, p) in enumerate(zip(exprs, probs)):
        t = new.add_var(f"t[{s}]")
        coeffs = {t: 1.0, B: 1.0}
        for j, a in expr.coeffs.items():
            coeffs[j] = coeffs.get(j, 0.0) - a
        new.add_ge(coeffs, expr.const)
        if p:
            obj[t] = p
    new.set_objective(obj, new.obj_const if keep_objective else 0.0)
    return new
