"""Expected-maximum and truncated two-stage objectives.

Scenarios realize independently, scenario ``s`` with probability ``p_s``.
For a fixed solution every scenario has a realized cost ``c_s`` and the
MinEMax objective is ``E[max_{s in A} c_s]`` over the random realized set
``A``.  The truncated surrogate is ``min_B B + sum_s p_s (c_s - B)^+`` and is
computed in closed form by sorting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

E_FACTOR = 1.0 - 1.0 / math.e
ENUMERATION_CAP = 22
MASS_TOL = 1e-12


class InstanceTooLarge(ValueError):
    """Raised when exact enumeration would exceed the scenario cap."""


class InfeasibleSolution(ValueError):
    """A candidate solution fails some scenario's covering requirement."""

    def __init__(self, scenario: int, detail: str = ""):
        self.scenario = scenario
        msg = f"solution infeasible for scenario {scenario}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass(frozen=True)
class ScenarioDistribution:
    """Independent Bernoulli scenario probabilities with total mass >= 1."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        for p in probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p} outside [0, 1]")
        if math.fsum(probs) < 1.0 - MASS_TOL:
            raise ValueError("distribution mass below 1; pad with dummy scenarios")

    @classmethod
    def padded(cls, probs: Sequence[float]) -> "ScenarioDistribution":
        """Append a probability-1 dummy scenario when the mass is below 1."""
        probs = tuple(float(p) for p in probs)
        if math.fsum(probs) < 1.0 - MASS_TOL:
            probs = probs + (1.0,)
        return cls(probs)

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def mass(self) -> float:
        return math.fsum(self.probs)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class TruncationResult:
    threshold_B: float
    prefix_M: frozenset[int]
    value: float


def _as_probs(dist) -> np.ndarray:
    if isinstance(dist, ScenarioDistribution):
        return np.asarray(dist.probs, dtype=float)
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must be a vector with entries in [0, 1]")
    return p


def _as_costs(costs, m: int) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    if c.shape != (m,):
        raise ValueError(f"expected {m} costs, got shape {c.shape}")
    if np.any(c < 0.0) or not np.all(np.isfinite(c)):
        raise ValueError("scenario costs must be finite and nonnegative")
    return c


def pad(costs, dist) -> tuple[np.ndarray, np.ndarray]:
    """Append a zero-cost, probability-1 scenario if the mass is below 1.

    Neither objective changes under this padding.
    """
    p = _as_probs(dist)
    c = _as_costs(costs, len(p))
    if math.fsum(p) < 1.0 - MASS_TOL:
        return np.append(c, 0.0), np.append(p, 1.0)
    return c, p


@lru_cache(maxsize=64)
def _realization_weights(probs: tuple[float, ...]) -> np.ndarray:
    # weight[mask] = Pr[A == mask], bit i of mask <=> scenario i realized
    w = np.ones(1)
    for p in probs:
        w = np.concatenate((w * (1.0 - p), w * p))
    w.setflags(write=False)
    return w


def _mask_maxima(cost_rows: np.ndarray) -> np.ndarray:
    # rows x 2^m table of max over each realization mask (empty set -> 0)
    rows, m = cost_rows.shape
    vals = np.zeros((rows, 1))
    for i in range(m):
        vals = np.concatenate((vals, np.maximum(vals, cost_rows[:, i : i + 1])), axis=1)
    return vals


def expected_max_exact(costs, dist, cap: int = ENUMERATION_CAP) -> float:
    """E[max_{s in A} c_s] by summing over all 2^m realization sets."""
    p = _as_probs(dist)
    c = _as_costs(costs, len(p))
    if len(p) > cap:
        raise InstanceTooLarge("instance too large for exact enumeration")
    if len(p) == 0:
        return 0.0
    w = _realization_weights(tuple(p.tolist()))
    return float(_mask_maxima(c[None, :])[0] @ w)


def expected_max_batch(cost_rows, dist, cap: int = 16, chunk: int | None = None) -> np.ndarray:
    """Row-wise :func:`expected_max_exact` for a matrix of cost vectors."""
    p = _as_probs(dist)
    rows = np.atleast_2d(np.asarray(cost_rows, dtype=float))
    if rows.shape[1] != len(p):
        raise ValueError("cost matrix width must equal the number of scenarios")
    if len(p) > cap:
        raise InstanceTooLarge("instance too large for exact enumeration")
    w = _realization_weights(tuple(p.tolist()))
    if chunk is None:
        chunk = max(1, (1 << 20) // len(w))
    out = np.empty(rows.shape[0])
    for lo in range(0, rows.shape[0], chunk):
        out[lo : lo + chunk] = _mask_maxima(rows[lo : lo + chunk]) @ w
    return out


def expected_max_monte_carlo(costs, dist, trials: int, seed: int, chunk: int = 65536) -> tuple[float, float]:
    """Sample-mean estimate of the expected maximum and its standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = _as_probs(dist)
    c = _as_costs(costs, len(p))
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        hit = rng.random((n, len(p))) < p
        sample = np.where(hit, c, 0.0).max(axis=1, initial=0.0)
        total += float(sample.sum())
        total_sq += float(sample @ sample)
        done += n
    mean = total / trials
    if trials == 1:
        return mean, 0.0
    var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
    return mean, math.sqrt(var / trials)


def truncation_objective(B: float, costs, dist) -> float:
    """f(B) = B + sum_s p_s (c_s - B)^+."""
    p = _as_probs(dist)
    c = _as_costs(costs, len(p))
    return float(B + p @ np.maximum(c - B, 0.0))


def truncated_cost(costs, dist) -> TruncationResult:
    """Closed-form minimizer of the truncated objective.

    Scenarios are sorted by cost descending (ties: lower index first); ``b``
    is the shortest prefix whose probability mass reaches 1 and the threshold
    is the cost of its last scenario.
    """
    p = _as_probs(dist)
    c = _as_costs(costs, len(p))
    if math.fsum(p) < 1.0 - MASS_TOL:
        raise ValueError("distribution mass below 1; pad with dummy scenarios")
    order = sorted(range(len(c)), key=lambda s: (-c[s], s))
    mass = 0.0
    prefix = []
    for s in order:
        prefix.append(s)
        mass += p[s]
        if mass >= 1.0 - MASS_TOL:
            break
    B = float(c[prefix[-1]])
    value = B + float(p @ np.maximum(c - B, 0.0))
    return TruncationResult(B, frozenset(prefix), value)


def truncated_value(costs, dist) -> float:
    """Truncated objective value, padding with a dummy scenario when needed."""
    c, p = pad(costs, dist)
    return truncated_cost(c, p).value


def truncated_batch(cost_rows, dist) -> np.ndarray:
    """Row-wise truncated values via the sorted-prefix rule (padding allowed)."""
    p = _as_probs(dist)
    rows = np.atleast_2d(np.asarray(cost_rows, dtype=float))
    if math.fsum(p) < 1.0 - MASS_TOL:
        rows = np.hstack([rows, np.zeros((rows.shape[0], 1))])
        p = np.append(p, 1.0)
    order = np.argsort(-rows, axis=1, kind="stable")
    sorted_p = p[order]
    cum = np.cumsum(sorted_p, axis=1)
    b = np.argmax(cum >= 1.0 - MASS_TOL, axis=1)
    B = np.take_along_axis(rows, order, axis=1)[np.arange(rows.shape[0]), b]
    return B + (np.maximum(rows - B[:, None], 0.0) * p).sum(axis=1)


def etrick_bounds(costs, dist) -> tuple[float, float]:
    """(lower, upper) bounds that sandwich the expected maximum."""
    upper = truncated_cost(costs, dist).value
    return E_FACTOR * upper, upper


def expected_max(costs, dist, trials: int = 1_000_000, seed: int = 0) -> float:
    """Exact expected maximum when enumerable, Monte-Carlo estimate otherwise."""
    if len(_as_probs(dist)) <= ENUMERATION_CAP:
        return expected_max_exact(costs, dist)
    return expected_max_monte_carlo(costs, dist, trials, seed)[0]


def objective_summary(costs, dist, trials: int = 1_000_000, seed: int = 0) -> dict:
    """Both objectives plus the threshold diagnostics for one cost vector."""
    c, p = pad(costs, dist)
    tr = truncated_cost(c, p)
    out = {"trunc": tr.value, "threshold_B": tr.threshold_B, "prefix_M": sorted(s for s in tr.prefix_M if s < len(_as_probs(dist)))}
    if len(p) <= ENUMERATION_CAP:
        out["emax"] = expected_max_exact(c, p)
        out["emax_std_error"] = 0.0
    else:
        out["emax"], out["emax_std_error"] = expected_max_monte_carlo(c, p, trials, seed)
    return out
