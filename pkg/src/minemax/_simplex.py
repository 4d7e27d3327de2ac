"""Dense two-phase revised simplex for small LPs in standard form.

    min c.x  s.t.  A x = b,  x >= 0,  b >= 0

Dantzig pricing by default.  When too many consecutive degenerate pivots
pile up we switch to Bland's rule for the rest of the phase, which cannot
cycle.  The basis inverse is kept explicitly and refreshed from scratch
every ``REFACTOR`` pivots.
"""

from __future__ import annotations

import numpy as np

REFACTOR = 64


class SimplexStalled(RuntimeError):
    pass


class _Phase:
    def __init__(self, A, b, c, basis, allowed, tol, max_iter):
        self.A = A
        self.b = b
        self.c = c
        self.basis = list(basis)
        self.allowed = allowed  # boolean mask of columns that may enter
        self.tol = tol
        self.max_iter = max_iter
        self.degenerate_limit = 10 * (A.shape[0] + A.shape[1])
        self._refactor()

    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexStalled("solver stalled") from exc
        self.xB = self.Binv @ self.b
        self.since_refactor = 0

    def run(self) -> str:
        A, c, tol = self.A, self.c, self.tol
        m, n = A.shape
        bland = False
        degenerate_run = 0
        for _ in range(self.max_iter):
            y = c[self.basis] @ self.Binv
            reduced = c - y @ A
            reduced[self.basis] = 0.0
            candidates = np.flatnonzero(self.allowed & (reduced < -tol))
            if candidates.size == 0:
                return "optimal"
            if bland:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmin(reduced[candidates])])
            d = self.Binv @ A[:, q]
            pos = d > tol
            if not np.any(pos):
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / d[pos]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + tol * max(1.0, theta))
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(d[ties])])
            if theta <= tol:
                degenerate_run += 1
                if degenerate_run > self.degenerate_limit:
                    bland = True
            else:
                degenerate_run = 0
            self._pivot(r, q, d)
        raise SimplexStalled("solver stalled")

    def _pivot(self, r, q, d):
        theta = self.xB[r] / d[r]
        self.xB -= theta * d
        self.xB[r] = theta
        self.basis[r] = q
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR:
            self._refactor()
            return
        # eta update of the explicit inverse
        pivot_row = self.Binv[r] / d[r]
        self.Binv -= np.outer(d, pivot_row)
        self.Binv[r] = pivot_row


def solve_standard(A, b, c, tol=1e-9, max_iter=None):
    """Return (status, x, y) where y are equality-row duals.

    status is one of "optimal", "infeasible", "unbounded".
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)

    # phase 1: artificial identity block
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    p1 = _Phase(A1, b, c1, range(n, n + m), allowed, tol, max_iter)
    p1.run()
    infeas = float(c1[p1.basis] @ p1.xB)
    if infeas > tol * max(1.0, float(np.abs(b).max(initial=0.0))) * 10:
        return "infeasible", None, None

    # drive zero-level artificials out of the basis where possible
    for r, col in enumerate(list(p1.basis)):
        if col < n:
            continue
        row = p1.Binv[r] @ A
        nonbasic = [j for j in range(n) if j not in p1.basis and abs(row[j]) > 1e-9]
        if nonbasic:
            q = max(nonbasic, key=lambda j: abs(row[j]))
            p1._pivot(r, q, p1.Binv @ A1[:, q])
    p1._refactor()

    c2 = np.concatenate([c, np.zeros(m)])
    allowed2 = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    p2 = _Phase(A1, b, c2, p1.basis, allowed2, tol, max_iter)
    status = p2.run()
    if status == "unbounded":
        return "unbounded", None, None
    x = np.zeros(n + m)
    x[p2.basis] = p2.xB
    y = c2[p2.basis] @ p2.Binv
    y = np.where(flip, -y, y)
    return "optimal", np.maximum(x[:n], 0.0), y
