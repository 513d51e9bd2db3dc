"""`simulate`: packet-level Monte Carlo run on one link or on a graph."""

import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from commands.common import (
    EXIT_OK,
    UsageError,
    positive_float,
    positive_int,
    read_graph,
    write_csv,
    write_json,
)
from config import MC_SAMPLES
from flowopt import SolverOptions, solve
from mcsim import (
    SimConfig,
    SimReport,
    simulate_network_unicast,
    simulate_ptp_fixed,
    simulate_ptp_layered,
)
from netmodel import NetworkGraph, RateAssignment
from ptp import LayeredScheme
from schemas import FlowSolutionDocument, SimReportDocument

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "mode",
    "seed",
    "slots_run",
    "empirical_rate",
    "stderr",
    "from",
    "to",
    "delivery",
    "retention",
]


def _ptp_report(args: argparse.Namespace, cfg: SimConfig) -> tuple[str, SimReport]:
    if args.rate is None or args.power is None:
        raise UsageError("--ptp runs need --rate and --power")
    if args.scheme == "fixed":
        return "ptp-fixed", simulate_ptp_fixed(args.rate, args.power, args.sigma2, cfg)
    if args.alpha is None or args.rate2 is None:
        raise UsageError("--scheme two-layer needs --alpha and --rate2")
    if not 0 < args.alpha < 1:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    scheme = LayeredScheme.two_layer(args.power, args.alpha, args.rate, args.rate2)
    return "ptp-two-layer", simulate_ptp_layered(scheme, args.power, args.sigma2, cfg)


def _load_rates(
    path: Path, destination: str
) -> tuple[RateAssignment, dict[str, list[str]]]:
    try:
        document = FlowSolutionDocument.model_validate_json(path.read_bytes())
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e.strerror}") from e
    except ValidationError as e:
        raise UsageError(f"{path} is not a solution written by `net optimize`") from e
    return document.simulation_inputs(destination)


def _network_report(args: argparse.Namespace, cfg: SimConfig) -> SimReport:
    if args.seed is None:
        raise UsageError("network simulations need an explicit --seed")
    graph: NetworkGraph = read_graph(Path(args.graph))
    if args.power is not None:
        graph = graph.with_uniform_power(args.power)
    destination = graph.destinations[0]
    if args.rates is not None:
        rates, priorities = _load_rates(Path(args.rates), destination)
    else:
        logger.info("no --rates given; running the flow optimizer first")
        solution = solve(graph, SolverOptions(seed=args.seed))
        rates = RateAssignment(rates=solution.active_rates())
        priorities = {
            node: list(order)
            for (node, dest), order in solution.priorities.items()
            if dest == destination
        }
    return simulate_network_unicast(graph, rates, priorities, cfg)


def run(args: argparse.Namespace) -> int:
    if args.graph is not None:
        mode = "network"
        report = _network_report(args, SimConfig(args.packets, args.seed or 0))
        seed = args.seed
    else:
        seed = 0 if args.seed is None else args.seed
        mode, report = _ptp_report(args, SimConfig(args.packets, seed))

    document = SimReportDocument.from_report(report, mode, seed)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        summary = [mode, seed, report.slots_run, report.empirical_rate, report.stderr]
        write_csv(
            out,
            args,
            CSV_HEADER,
            [
                [*summary, link.sender, link.receiver, link.delivery, link.retention]
                for link in document.links
            ],
        )
    else:
        write_json(out, document)
    return EXIT_OK


def register(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    parser = subparsers.add_parser("simulate", help="packet-level Monte Carlo run")
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--graph", help="graph JSON file (network run)")
    target.add_argument("--ptp", action="store_true", help="single-link run")
    parser.add_argument("--rate", type=float, help="rate (first layer for two-layer)")
    parser.add_argument("--power", type=positive_float, help="transmit power")
    parser.add_argument("--sigma2", type=positive_float, default=1.0)
    parser.add_argument("--scheme", choices=["fixed", "two-layer"], default="fixed")
    parser.add_argument("--alpha", type=float, help="power fraction of layer one")
    parser.add_argument("--rate2", type=float, help="rate of layer two")
    parser.add_argument("--rates", help="solution JSON from `net optimize`")
    parser.add_argument("--packets", type=positive_int, default=MC_SAMPLES)
    parser.add_argument("--seed", type=int, help="random seed (required with --graph)")
    parser.add_argument("--out", required=True, help="JSON, or CSV by .csv suffix")
    parser.set_defaults(handler=run)
