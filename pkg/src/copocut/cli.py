"""Command-line entry point: ``copocut <subcommand> ...``.

Exit status is 0 on success, 2 for unreadable or invalid input and 3 when
a solver fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from copocut.bench import SuiteConfig, penalty_weight_sweep, run_benchmark
from copocut.copositivity import Discretization, check_copositivity
from copocut.cutting_plane import Escalation, OracleConfig, OracleFailure, SolveConfig, solve_cop
from copocut.model import ModelError, Mbqp, as_sym_matrix
from copocut.problems import GraphFormatError, export_milp_text, load_graph, solve_max_clique
from copocut.qubo import AnnealingSolver, AnnealParams, ExactSolver, SizeCapError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class InputError(Exception):
    pass


class SolverError(Exception):
    pass


def _solver_args(p: argparse.ArgumentParser, bits: int) -> None:
    p.add_argument("--bits", type=int, default=bits, help="binary digits per coordinate (grid 2**bits - 1)")
    p.add_argument("--solver", choices=("exact", "sa"), default="exact")
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def _loop_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--target-width", type=float, default=None,
                   help="stop once the bound interval is this narrow")
    p.add_argument("--multi-cut", action="store_true", help="use several certificates per oracle call")
    p.add_argument("--escalate", action="store_true",
                   help="before accepting a copositive verdict from SA, double reads (up to 8x) then add bits (up to +2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copocut", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="bound a mixed-binary QP through its copositive dual")
    p.add_argument("problem", help="MBQP JSON file")
    _solver_args(p, bits=4)
    _loop_args(p)
    p.add_argument("--radius", type=float, default=10.0, help="initial ball radius in dual space")
    p.add_argument("--report", default=None, help="report JSON path (default: <problem stem>_report.json)")

    p = sub.add_parser("maxclique", help="estimate the clique number of a graph")
    p.add_argument("graph", help="DIMACS or JSON graph file")
    _solver_args(p, bits=1)
    _loop_args(p)

    p = sub.add_parser("checkcop", help="grid copositivity check of one matrix")
    p.add_argument("matrix", help='JSON file {"size": n, "entries": [[...]]}')
    _solver_args(p, bits=4)

    p = sub.add_parser("bench", help="run a benchmark suite and write CSV")
    p.add_argument("suite", help="suite JSON file")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("penalty-sweep", help="penalty-QUBO sample quality across weights")
    p.add_argument("graph")
    p.add_argument("--weights", default="0.5,1,2,4,8,16")
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export-milp", help="write the max-clique MILP in LP format")
    p.add_argument("graph")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    return parser


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _graph(path):
    try:
        return load_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (GraphFormatError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _oracle(args) -> OracleConfig:
    if args.bits < 1:
        raise InputError("--bits must be >= 1")
    if args.solver == "exact":
        solver = ExactSolver()
    else:
        try:
            solver = AnnealingSolver(AnnealParams(sweeps=args.sweeps, reads=args.reads, seed=args.seed))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    escalation = None
    if getattr(args, "escalate", False):
        escalation = Escalation(bits_max=args.bits + 2, reads_max=args.reads * 8)
    return OracleConfig(solver=solver, bits=args.bits, escalation=escalation)


def _check_status(report) -> None:
    if report.status == "oracle_failed":
        raise SolverError(f"oracle failed: {report.message}")


def cmd_solve(args) -> int:
    data = _read_json(args.problem)
    try:
        problem = Mbqp.from_dict(data)
        config = SolveConfig(initial_radius=args.radius, max_iters=args.max_iters,
                             multi_cut=args.multi_cut, gap_tol=args.target_width)
    except (ModelError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.problem}: {exc}") from exc
    report = solve_cop(problem, _oracle(args), config)
    _check_status(report)
    out = Path(args.report) if args.report else Path(f"{Path(args.problem).stem}_report.json")
    summary = {
        "status": report.status,
        "lower_bound": report.lower_bound,
        "upper_bound": report.upper_bound,
        "iterations": report.iterations,
        "oracle_calls": report.oracle_calls,
        "oracle_time_s": report.oracle_time,
        "other_time_s": report.other_time,
        "best_dual": None if report.best_dual is None else np.asarray(report.best_dual.to_vector()).tolist(),
    }
    out.write_text(json.dumps(summary, indent=2, allow_nan=True) + "\n")
    print(f"[{report.lower_bound:.10g}, {report.upper_bound:.10g}] status={report.status} "
          f"iterations={report.iterations}")
    print(f"report: {out}")
    return EXIT_OK


def cmd_maxclique(args) -> int:
    g = _graph(args.graph)
    config = SolveConfig(initial_radius=1.0, max_iters=args.max_iters, gap_tol=args.target_width)
    outcome = solve_max_clique(g, _oracle(args), config)
    _check_status(outcome.report)
    print(outcome.clique_number_estimate)
    return EXIT_OK


def cmd_checkcop(args) -> int:
    data = _read_json(args.matrix)
    try:
        M = as_sym_matrix(data["entries"], "entries")
        if "size" in data and int(data["size"]) != M.shape[0]:
            raise ModelError(f"size {data['size']} disagrees with a {M.shape[0]}x{M.shape[0]} matrix")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.matrix}: {exc}") from exc
    oracle = _oracle(args)
    try:
        verdict = check_copositivity(M, Discretization(oracle.bits, M.shape[0]), oracle.solver)
    except SizeCapError as exc:
        raise SolverError(str(exc)) from exc
    print(json.dumps(verdict.to_dict()))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        cfg = SuiteConfig.from_dict(_read_json(args.suite))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.suite}: {exc}") from exc
    try:
        records = run_benchmark(cfg, out=args.out, workers=args.workers)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    correct = sum(bool(r.correct) for r in records)
    print(f"{len(records)} records, {correct} correct, written to {args.out}")
    return EXIT_OK


def cmd_penalty_sweep(args) -> int:
    g = _graph(args.graph)
    try:
        weights = [float(w) for w in args.weights.split(",") if w.strip()]
        params = AnnealParams(sweeps=args.sweeps, reads=args.reads, seed=args.seed)
        if not weights or any(not w > 0 for w in weights):
            raise ValueError("weights must be a comma-separated list of positive numbers")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print("weight,valid_fraction,mean_normalized_size,ground_fraction")
    for row in penalty_weight_sweep(g, weights, params):
        print(",".join(repr(row[k]) for k in ("weight", "valid_fraction", "mean_normalized_size", "ground_fraction")))
    return EXIT_OK


def cmd_export_milp(args) -> int:
    text = export_milp_text(_graph(args.graph))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "maxclique": cmd_maxclique,
    "checkcop": cmd_checkcop,
    "bench": cmd_bench,
    "penalty-sweep": cmd_penalty_sweep,
    "export-milp": cmd_export_milp,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, OracleFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
