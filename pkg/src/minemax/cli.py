"""Command line entry point: gen, solve, evaluate, reduce, bench.

Exit codes: 0 success, 2 validation error, 3 a bench ratio above its
problem's regression threshold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import instances_io
from .core import ENUMERATION_CAP, E_FACTOR, InfeasibleSolution, expected_max_exact, expected_max_monte_carlo, truncated_cost, pad
from .facility_problems import KCenterInstance, KCenterSolution, UflInstance, UflSolution, evaluate_kcenter, evaluate_ufl, solve_kcenter, solve_ufl
from .generators import UnknownFamily, generate
from .graph_problems import (
    MinCutInstance,
    MstInstance,
    SteinerInstance,
    TwoStageEdgeSolution,
    evaluate_graph_solution,
    solve_mincut,
    solve_mst,
    solve_steiner,
)
from .instances_io import InstanceFormatError
from .oracle import OracleCapExceeded, brute_force_opt
from .reductions import DEFAULT_SLACK, HybridInstance, choose_gamma, cost_hybrid, hybrid_to_minemax, interpret_back

EXIT_OK, EXIT_INVALID, EXIT_THRESHOLD = 0, 2, 3
BENCH_COLUMNS = ("instance", "solver", "emax", "trunc", "oracle_opt", "ratio", "seconds", "errors")
DEFAULT_MC_TRIALS = 100_000
RATIO_TOL = 1e-9

SOLVERS = {
    MinCutInstance: "mincut-lp-round",
    SteinerInstance: "steiner-flow-round",
    MstInstance: "mst-cut-randround",
    UflInstance: "ufl-filter-round",
    KCenterInstance: "kcenter-bhat-kmedian",
}


class UsageError(ValueError):
    pass


def problem_name(inst) -> str:
    return instances_io.body_to_json(inst)[0]


def threshold(inst, gamma: float | None = None) -> float:
    """Regression bound on alg / OPT_emax for one instance."""
    if isinstance(inst, HybridInstance):
        red = hybrid_to_minemax(inst, gamma)
        return threshold(red.instance) * red.inflation_factor
    if isinstance(inst, MinCutInstance):
        return 4.0 / E_FACTOR
    if isinstance(inst, UflInstance):
        return 8.0 / E_FACTOR
    if isinstance(inst, SteinerInstance):
        return 30.0 / E_FACTOR
    if isinstance(inst, MstInstance):
        return (40 * math.log(inst.graph.n) + 16 * math.log(max(inst.m, 1))) / E_FACTOR
    if isinstance(inst, KCenterInstance):
        return 57.0
    raise TypeError(type(inst).__name__)


# ------------------------------------------------------------------ solving


def _solve_base(inst, seed, epsilon):
    if isinstance(inst, MinCutInstance):
        return solve_mincut(inst)
    if isinstance(inst, SteinerInstance):
        return solve_steiner(inst)
    if isinstance(inst, MstInstance):
        return solve_mst(inst, seed=seed)
    if isinstance(inst, UflInstance):
        return solve_ufl(inst)
    if isinstance(inst, KCenterInstance):
        return solve_kcenter(inst, epsilon=epsilon)
    raise TypeError(type(inst).__name__)


def scenario_costs(inst, sol) -> np.ndarray:
    if isinstance(inst, UflInstance):
        return evaluate_ufl(inst, sol)
    if isinstance(inst, KCenterInstance):
        return evaluate_kcenter(inst, sol)
    return evaluate_graph_solution(inst, sol)


def solution_to_json(sol) -> dict:
    if isinstance(sol, TwoStageEdgeSolution):
        return {"first_stage": sorted(sol.first_stage), "second_stage": [sorted(x) for x in sol.second_stage]}
    if isinstance(sol, UflSolution):
        return {"first_stage": sorted(sol.first_stage_open), "second_stage": [sorted(x) for x in sol.second_stage_open]}
    return {"centers": sorted(sol.centers)}


def solution_from_json(inst, doc):
    if "solution" in doc:
        doc = doc["solution"]
    base = inst.base if isinstance(inst, HybridInstance) else inst
    try:
        if isinstance(base, KCenterInstance):
            return KCenterSolution(int(v) for v in doc["centers"])
        first = [int(v) for v in doc["first_stage"]]
        second = [[int(v) for v in X] for X in doc["second_stage"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed solution: {exc}") from None
    if len(second) != base.m:
        raise InstanceFormatError(f"solution has {len(second)} second stages, instance has {base.m} scenarios")
    if isinstance(base, UflInstance):
        return UflSolution(first, second)
    return TwoStageEdgeSolution(first, second)


def _objectives(costs, probs, seed, mc_trials) -> dict:
    tr = truncated_cost(*pad(costs, probs))
    out = {
        "costs": [float(c) for c in costs],
        "trunc": tr.value,
        "threshold_B": tr.threshold_B,
        "prefix_M": sorted(s for s in tr.prefix_M if s < len(costs)),
        "emax": None,
        "emax_mc": None,
        "emax_std_error": None,
    }
    if len(costs) <= ENUMERATION_CAP:
        out["emax"] = expected_max_exact(costs, probs)
    elif not mc_trials:
        mc_trials = DEFAULT_MC_TRIALS
    if mc_trials:
        est, se = expected_max_monte_carlo(costs, probs, mc_trials, seed)
        out["emax_mc"], out["emax_std_error"] = est, se
        if out["emax"] is None:
            out["emax"] = est
    return out


def _oracle(inst):
    try:
        return brute_force_opt(inst, "emax").opt_value, None
    except OracleCapExceeded as exc:
        return None, str(exc)


def _ratio(value, opt):
    if opt is None or value is None:
        return None
    if opt <= 0:
        return 1.0 if value <= RATIO_TOL else math.inf
    return value / opt


def solve_instance(inst, ident="", seed=0, mc_trials=0, epsilon=0.25, gamma_slack=DEFAULT_SLACK, oracle=False) -> dict:
    """Run the matching pipeline and return a RunReport dictionary."""
    t0 = time.perf_counter()
    report = {"instance": ident, "problem": problem_name(inst), "seed": seed}
    if isinstance(inst, HybridInstance):
        gamma = choose_gamma(inst, gamma_slack)
        red = hybrid_to_minemax(inst, gamma)
        red_sol = _solve_base(red.instance, seed, epsilon)
        sol = interpret_back(red, inst.base, red_sol)
        report["solver"] = "hybrid-reduce+" + SOLVERS[type(inst.base)]
        reduced = _objectives(scenario_costs(red.instance, red_sol), red.instance.probs, seed, mc_trials)
        report.update({f"reduced_{k}": v for k, v in reduced.items()})
        report["emax"], report["trunc"] = reduced["emax"], reduced["trunc"]
        report["costs"] = [float(c) for c in evaluate_graph_solution(inst.base, sol)]
        report["cost_hybrid"] = cost_hybrid(inst, sol)
        report["gamma"] = gamma
        report["inflation_factor"] = red.inflation_factor
        value = report["cost_hybrid"]
    else:
        sol = _solve_base(inst, seed, epsilon)
        report["solver"] = SOLVERS[type(inst)]
        report.update(_objectives(scenario_costs(inst, sol), inst.probs, seed, mc_trials))
        value = report["emax"]
        if isinstance(inst, KCenterInstance):
            report["Bhat"] = sol.info.get("Bhat")
        gamma = None
    report["solution"] = solution_to_json(sol)
    report["oracle_opt"] = report["ratio"] = None
    if oracle:
        report["oracle_opt"], note = _oracle(inst)
        if note:
            report["oracle_note"] = note
        report["ratio"] = _ratio(value, report["oracle_opt"])
    report["threshold"] = threshold(inst, gamma)
    report["seconds"] = time.perf_counter() - t0
    return report


def evaluate_instance(inst, sol, seed=0, mc_trials=0) -> dict:
    if isinstance(inst, HybridInstance):
        out = {"costs": [float(c) for c in evaluate_graph_solution(inst.base, sol)], "cost_hybrid": cost_hybrid(inst, sol)}
        return out
    return _objectives(scenario_costs(inst, sol), inst.probs, seed, mc_trials)


# ------------------------------------------------------------------- output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def bench_rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in BENCH_COLUMNS])
    return buf.getvalue()


def _json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, sort_keys=True, indent=1, default=default) + "\n"


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_params(items) -> dict:
    params = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} is not key=value")
        try:
            params[key.replace("-", "_")] = json.loads(raw)
        except json.JSONDecodeError:
            params[key.replace("-", "_")] = raw
    return params


def threads() -> int:
    try:
        return max(1, int(os.environ.get("MINEMAX_THREADS", "1")))
    except ValueError:
        return 1


# ------------------------------------------------------------------ commands


def cmd_gen(args) -> int:
    params = _parse_params(args.param)
    try:
        inst = generate(args.family, seed=args.seed, **params)
    except (UnknownFamily, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    ident = args.id or f"{args.family}-{args.seed}"
    _emit(instances_io.dumps(inst, ident, True if args.oracle else None), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst, header = instances_io.load(args.file)
    report = solve_instance(
        inst,
        header.get("id", Path(args.file).stem),
        seed=args.seed,
        mc_trials=args.mc_trials,
        epsilon=args.epsilon,
        gamma_slack=args.gamma_slack,
        oracle=args.oracle or header.get("oracle", False),
    )
    if args.format == "csv":
        _emit(bench_rows_to_csv([report]), args.output)
    else:
        _emit(_json(report), args.output)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst, _ = instances_io.load(args.file)
    try:
        doc = json.loads(Path(args.solution).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"solution is not valid JSON: {exc}") from None
    sol = solution_from_json(inst, doc)
    out = evaluate_instance(inst, sol, args.seed, args.mc_trials)
    _emit(_json(out), args.output)
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst, header = instances_io.load(args.file)
    if not isinstance(inst, HybridInstance):
        raise InstanceFormatError("reduce expects a hybrid instance")
    gamma = args.gamma if args.gamma is not None else choose_gamma(inst, args.gamma_slack)
    red = hybrid_to_minemax(inst, gamma)
    ident = header.get("id", Path(args.file).stem) + "-reduced"
    _emit(instances_io.dumps(red.instance, ident), args.output)
    print(_json({"gamma": gamma, "inflation_factor": red.inflation_factor, "m": red.m}), end="", file=sys.stderr)
    return EXIT_OK


def _bench_one(path: Path, args) -> dict:
    row = {"instance": path.stem}
    try:
        inst, header = instances_io.load(path)
        row["instance"] = header.get("id", path.stem)
        rep = solve_instance(
            inst,
            row["instance"],
            seed=args.seed,
            mc_trials=args.mc_trials,
            epsilon=args.epsilon,
            gamma_slack=args.gamma_slack,
            oracle=header.get("oracle", False) or args.oracle,
        )
        row.update({k: rep.get(k) for k in BENCH_COLUMNS if k in rep})
        row["threshold"] = rep["threshold"]
        if rep.get("oracle_note"):
            row["errors"] = rep["oracle_note"]
    except (InstanceFormatError, InfeasibleSolution, OSError, ValueError) as exc:
        row["errors"] = f"{type(exc).__name__}: {exc}"
    return row


def run_bench(corpus, args) -> list[dict]:
    corpus = Path(corpus)
    if not corpus.is_dir():
        raise InstanceFormatError(f"corpus {corpus} is not a readable directory")
    files = sorted(corpus.glob("*.json"))
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        return list(pool.map(lambda p: _bench_one(p, args), files))


def cmd_bench(args) -> int:
    rows = run_bench(args.corpus, args)
    if args.format == "json":
        _emit(_json(rows), args.output)
    else:
        _emit(bench_rows_to_csv(rows), args.output)
    breached = [r for r in rows if r.get("ratio") is not None and r["ratio"] > r["threshold"] * (1 + RATIO_TOL)]
    for r in breached:
        print(f"threshold breach: {r['instance']} ratio {r['ratio']:.6g} > {r['threshold']:.6g}", file=sys.stderr)
    return EXIT_THRESHOLD if breached else EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minemax", description="Two-stage build-versus-rent solvers under the E-max objective.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mc-trials", type=int, default=0, help="Monte-Carlo trials in addition to exact E-max")
        sp.add_argument("--epsilon", type=float, default=0.25, help="k-center threshold grid step")
        sp.add_argument("--gamma-slack", type=float, default=DEFAULT_SLACK, help="hybrid reduction slack m/gamma")
        sp.add_argument("-o", "--output")

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("family")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", "-p", action="append", help="key=value, value parsed as JSON when possible")
    g.add_argument("--id")
    g.add_argument("--oracle", action="store_true", help="flag the instance as oracle-solvable")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("file")
    common(s)
    s.add_argument("--oracle", action="store_true")
    s.add_argument("--format", choices=("csv", "json"), default="json")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="evaluate a given solution")
    e.add_argument("file")
    e.add_argument("solution")
    common(e)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reduce", help="reduce a hybrid instance to MinEMax")
    r.add_argument("file")
    common(r)
    r.add_argument("--gamma", type=float)
    r.set_defaults(func=cmd_reduce)

    b = sub.add_parser("bench", help="solve every instance in a corpus directory")
    b.add_argument("corpus")
    common(b)
    b.add_argument("--oracle", action="store_true")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, UsageError, InfeasibleSolution, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
