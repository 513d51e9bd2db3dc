"""`net optimize|cutset|bound|gap`: network rates for a graph file."""

import argparse
import logging
from pathlib import Path

from commands.common import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    CsvValue,
    UsageError,
    positive_float,
    positive_int,
    read_graph,
    write_csv,
    write_json,
)
from config import MAX_CUT_NODES, MC_SAMPLES
from flowopt import SolverOptions, StepMode, solve
from netmodel import (
    capacity_upper_bound,
    cutset_rate_fixed,
    theorem2_gap_constant,
)
from schemas import BoundDocument, CutsetDocument, FlowSolutionDocument

logger = logging.getLogger(__name__)

GAP_HEADER = ["P", "C", "C_cutset", "C_ub", "C_ub_stderr", "ratio", "theorem2_constant"]


def solver_options(args: argparse.Namespace) -> SolverOptions:
    try:
        return SolverOptions(
            max_iters=args.iters,
            gamma0=args.gamma0,
            eta0=args.eta0,
            step_mode=StepMode(args.step_mode),
            tolerance=args.tolerance,
            early_stop=args.early_stop,
            seed=args.seed,
            trace_every=args.trace_every,
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def run_optimize(args: argparse.Namespace) -> int:
    graph = read_graph(Path(args.graph))
    opts = solver_options(args)
    solution = solve(graph, opts)
    write_json(Path(args.out), FlowSolutionDocument.from_solution(solution, opts))
    return EXIT_OK if solution.converged else EXIT_NOT_CONVERGED


def run_cutset(args: argparse.Namespace) -> int:
    graph = read_graph(Path(args.graph))
    result = cutset_rate_fixed(graph, grid=args.grid, seed=args.seed)
    write_json(Path(args.out), CutsetDocument.from_result(result))
    return EXIT_OK


def run_bound(args: argparse.Namespace) -> int:
    graph = read_graph(Path(args.graph))
    bound = capacity_upper_bound(graph, args.samples, args.seed)
    write_json(Path(args.out), BoundDocument.from_bound(bound, args.samples, args.seed))
    return EXIT_OK


def parse_powers(text: str) -> list[float]:
    try:
        powers = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"--powers must be comma-separated numbers: {e}") from e
    if not powers:
        raise UsageError("--powers lists no power")
    if any(not p > 0 for p in powers):
        raise UsageError(f"--powers must all be positive, got {powers}")
    return powers


def run_gap(args: argparse.Namespace) -> int:
    """Achievable rate against the ergodic bound as every node's power grows."""
    graph = read_graph(Path(args.graph))
    powers = parse_powers(args.powers)
    opts = solver_options(args)
    enumerable = len(graph.nodes) <= MAX_CUT_NODES
    rows: list[list[CsvValue]] = []
    status = EXIT_OK
    for power in powers:
        scaled = graph.with_uniform_power(power)
        solution = solve(scaled, opts)
        if not solution.converged:
            status = EXIT_NOT_CONVERGED
        cutset = cutset_rate_fixed(scaled, seed=args.seed).rate if enumerable else None
        bound = capacity_upper_bound(scaled, args.samples, args.seed)
        rate = solution.multicast_rate
        rows.append(
            [
                power,
                rate,
                cutset,
                bound.value,
                bound.stderr,
                bound.value / rate if rate > 0 else None,
                theorem2_gap_constant(scaled),
            ]
        )
        logger.info("gap at P=%g: C=%.6g, C_ub=%.6g", power, rate, bound.value)
    write_csv(Path(args.out), args, GAP_HEADER, rows)
    return status


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iters", type=positive_int, default=20_000, help="iteration budget")
    parser.add_argument("--gamma0", type=positive_float, help="initial step for C")
    parser.add_argument("--eta0", type=positive_float, help="initial step for the queues")
    parser.add_argument(
        "--step-mode",
        choices=[mode.value for mode in StepMode],
        default=StepMode.DIMINISHING.value,
    )
    parser.add_argument(
        "--tolerance", type=float, default=1e-3, help="largest conservation shortfall"
    )
    parser.add_argument(
        "--no-early-stop",
        dest="early_stop",
        action="store_false",
        help="run the whole iteration budget",
    )
    parser.add_argument(
        "--trace-every", type=int, default=0, help="record every k-th iterate"
    )


def _add_bound_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--samples", type=positive_int, default=MC_SAMPLES, help="Monte Carlo draws"
    )


def register(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    net = subparsers.add_parser("net", help="network rates for a graph file")
    actions = net.add_subparsers(dest="action", required=True)

    commands = {
        "optimize": ("multicast rate from the flow optimizer", run_optimize),
        "cutset": ("fixed-rate cut-set rate (small graphs)", run_cutset),
        "bound": ("ergodic cut-set upper bound", run_bound),
        "gap": ("achievable rate against the upper bound over powers", run_gap),
    }
    for name, (help_text, handler) in commands.items():
        parser = actions.add_parser(name, help=help_text)
        parser.add_argument("--graph", required=True, help="graph JSON file")
        parser.add_argument("--out", required=True, help="output file")
        parser.add_argument("--seed", type=int, default=0, help="random seed")
        if name in ("optimize", "gap"):
            _add_solver_flags(parser)
        if name in ("bound", "gap"):
            _add_bound_flags(parser)
        if name == "cutset":
            parser.add_argument("--grid", type=positive_int, default=256)
        if name == "gap":
            parser.add_argument(
                "--powers", required=True, help="comma-separated node powers"
            )
        parser.set_defaults(handler=handler)
