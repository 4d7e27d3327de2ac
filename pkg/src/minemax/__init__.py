"""Two-stage build-versus-rent optimization under the expected-maximum objective."""

from .core import (
    E_FACTOR,
    InfeasibleSolution,
    ScenarioDistribution,
    expected_max,
    expected_max_exact,
    expected_max_monte_carlo,
    truncated_cost,
)
from .facility_problems import KCenterInstance, UflInstance, solve_kcenter, solve_ufl
from .graph_problems import MinCutInstance, MstInstance, SteinerInstance, solve_mincut, solve_mst, solve_steiner
from .graphs import Graph
from .lp import LinearProgram, solve, solve_with_separation
from .oracle import brute_force_opt
from .reductions import HybridInstance, choose_gamma, hybrid_to_minemax, interpret_back

__version__ = "0.1.0"

__all__ = [
    "E_FACTOR",
    "Graph",
    "HybridInstance",
    "InfeasibleSolution",
    "KCenterInstance",
    "LinearProgram",
    "MinCutInstance",
    "MstInstance",
    "ScenarioDistribution",
    "SteinerInstance",
    "UflInstance",
    "brute_force_opt",
    "choose_gamma",
    "expected_max",
    "expected_max_exact",
    "expected_max_monte_carlo",
    "hybrid_to_minemax",
    "interpret_back",
    "solve",
    "solve_kcenter",
    "solve_mincut",
    "solve_mst",
    "solve_steiner",
    "solve_ufl",
    "solve_with_separation",
    "truncated_cost",
]
