"""Primal-dual subgradient search for the largest multicast rate with
fixed-rate transmission and priority-based opportunistic forwarding.

Every iteration each transmitter ranks its neighbors by queue differential,
picks its rate by line search, and splits its broadcast greedily along the
ranking; then the source rate C and the queues take a subgradient step.
The reported solution averages the iterates over a trailing window, which
realizes the time sharing between the rates visited.
"""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np

from flowopt.duals import DualState, FlowKey, update_duals, update_source_rate
from flowopt.polymatroid import (
    Priorities,
    assign_flows,
    neighbor_priorities,
    rate_objective,
)
from netmodel import NetworkGraph, RateAssignment
from numerics import FloatArray, RealInterval, maximize_1d
from ptp.fixed_rate import rate_cap

logger = logging.getLogger(__name__)

# Step scale per destination used when gamma0 / eta0 are not given.
DEFAULT_STEP_SCALE = 2.0
CHECK_EVERY = 10
# Rates of the time-sharing distribution are rounded to this many decimals.
MIXTURE_DECIMALS = 4
# Share of the averaged source rate that may go undelivered in a converged run.
UNDELIVERED_SLACK = 0.05


class SolverOptionsError(ValueError):
    """Raised for inconsistent solver options."""


class StepMode(Enum):
    DIMINISHING = "diminishing"
    CONSTANT = "constant"


@dataclass(frozen=True, slots=True, kw_only=True)
class SolverOptions:
    """Knobs of `solve`.

    gamma0 and eta0 default to DEFAULT_STEP_SCALE / |D|. In diminishing mode
    step t is gamma0 / sqrt(t) (resp. eta0 / sqrt(t)). `tolerance` bounds the
    conservation shortfall of a converged solution; with `early_stop` off
    the solver always runs `max_iters` iterations and judges convergence at
    the end. `trace_every` > 0 records every k-th iterate. The iteration is
    deterministic: `seed` is only carried into the exported settings.
    """

    max_iters: int = 20_000
    gamma0: float | None = None
    eta0: float | None = None
    step_mode: StepMode = StepMode.DIMINISHING
    averaging_window: float = 0.5
    rate_grid: int = 64
    rate_refinements: int = 3
    tolerance: float = 1e-3
    early_stop: bool = True
    seed: int = 0
    trace_every: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise SolverOptionsError(f"max_iters must be >= 1, got {self.max_iters}")
        for name in ("gamma0", "eta0"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise SolverOptionsError(f"{name} must be positive, got {value}")
        if not 0 < self.averaging_window <= 1:
            raise SolverOptionsError(
                f"averaging_window must lie in (0, 1], got {self.averaging_window}"
            )
        if self.rate_grid < 3 or self.rate_refinements < 0:
            raise SolverOptionsError("rate_grid must be >= 3, rate_refinements >= 0")
        if not self.tolerance > 0:
            raise SolverOptionsError(f"tolerance must be positive, got {self.tolerance}")
        if self.trace_every < 0:
            raise SolverOptionsError(f"trace_every must be >= 0, got {self.trace_every}")

    def step_sizes(self, t: int, destinations: int) -> tuple[float, float]:
        gamma0 = self.gamma0 or DEFAULT_STEP_SCALE / destinations
        eta0 = self.eta0 or DEFAULT_STEP_SCALE / destinations
        scale = 1.0 / math.sqrt(t) if self.step_mode is StepMode.DIMINISHING else 1.0
        return gamma0 * scale, eta0 * scale


@dataclass(frozen=True, slots=True)
class TracePoint:
    iteration: int
    source_rate: float
    averaged_rate: float


@dataclass(frozen=True, slots=True, kw_only=True)
class FlowSolution:
    multicast_rate: float
    flows: dict[FlowKey, float]
    node_rates: dict[str, float]
    rate_mixtures: dict[str, tuple[tuple[float, float], ...]]
    priorities: dict[tuple[str, str], tuple[str, ...]]
    residuals: dict[tuple[str, str], float]
    duals: DualState
    converged: bool
    iterations: int
    trace: tuple[TracePoint, ...] = field(default=())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def assignment(self) -> RateAssignment:
        """Time-shared rate assignment realized by the averaged iterates."""
        return RateAssignment(rates=self.node_rates, mixtures=self.rate_mixtures)

    def active_rates(self) -> dict[str, float]:
        """Mean rate of each node over the iterations in which it sent."""
        active = {}
        for node, atoms in self.rate_mixtures.items():
            sending = [(r, w) for r, w in atoms if r > 0]
            weight = math.fsum(w for _, w in sending)
            active[node] = (
                math.fsum(r * w for r, w in sending) / weight if weight else 0.0
            )
        return active


def _routable_neighbors(graph: NetworkGraph, node: str, dest: str) -> frozenset[str]:
    """Neighbors through which traffic for `dest` can still arrive."""
    if node == dest:
        return frozenset()
    return frozenset(j for j in graph.out_neighbors(node) if graph.can_reach(j, dest))


def _restrict(priorities: Priorities, allowed: frozenset[str]) -> Priorities:
    kept = [(j, w) for j, w in zip(*priorities) if j in allowed]
    return Priorities(tuple(j for j, _ in kept), tuple(w for _, w in kept))


def _node_rate_cap(graph: NetworkGraph, node: str) -> float:
    power = graph.power(node)
    if power == 0:
        return 0.0
    return rate_cap(power, max(link.sigma2 for link in graph.out_links(node)))


def _best_rate(
    graph: NetworkGraph,
    node: str,
    priorities: tuple[Priorities, ...],
    opts: SolverOptions,
    cap: float,
) -> float:
    if cap == 0 or not any(w > 0 for p in priorities for w in p.weights):
        return 0.0
    rate, _ = maximize_1d(
        lambda r: rate_objective(graph, node, priorities, r),
        RealInterval(0.0, cap),
        opts.rate_grid,
        opts.rate_refinements,
    )
    return rate


def _commodity_priorities(
    graph: NetworkGraph, node: str, state: DualState
) -> tuple[Priorities, ...]:
    return tuple(
        _restrict(
            neighbor_priorities(state, node, dest, graph),
            _routable_neighbors(graph, node, dest),
        )
        for dest in graph.destinations
    )


def select_rate(
    graph: NetworkGraph,
    node: str,
    state: DualState,
    opts: SolverOptions | None = None,
) -> float:
    """Rate maximizing the queue-weighted delivered rate of `node`; 0 when
    no neighbor has a positive queue differential.
    """
    opts = opts or SolverOptions()
    priorities = _commodity_priorities(graph, node, state)
    return _best_rate(graph, node, priorities, opts, _node_rate_cap(graph, node))


def delivered_rate(graph: NetworkGraph, flows: Mapping[FlowKey, float]) -> float:
    """Rate every destination receives through `flows`: the smallest over
    destinations d of the max-flow with link capacities x[i, j, d].

    Relays that forward more than they receive add nothing here.
    """
    rates = []
    for dest in graph.destinations:
        flow_graph = nx.DiGraph()
        flow_graph.add_nodes_from(graph.node_ids)
        for link in graph.links:
            flow_graph.add_edge(
                link.sender,
                link.receiver,
                capacity=flows.get((link.sender, link.receiver, dest), 0.0),
            )
        rates.append(float(nx.maximum_flow_value(flow_graph, graph.source, dest)))
    return min(rates)


def conservation_shortfall(
    graph: NetworkGraph, flows: Mapping[FlowKey, float], rate: float
) -> dict[tuple[str, str], float]:
    """[inflow + rate * [i = s] - outflow]+ for every node i other than the
    destination d itself, per destination.

    The queues are clamped at zero, so only traffic a node fails to pass on
    violates conservation; forwarding more than it receives does not.
    """
    balance = {
        (node, dest): 0.0
        for dest in graph.destinations
        for node in graph.node_ids
        if node != dest
    }
    for (sender, receiver, dest), value in flows.items():
        if (receiver, dest) in balance:
            balance[(receiver, dest)] += value
        if (sender, dest) in balance:
            balance[(sender, dest)] -= value
    for dest in graph.destinations:
        balance[(graph.source, dest)] += rate
    return {row: max(value, 0.0) for row, value in balance.items()}


_Assessment = tuple[float, dict[FlowKey, float], dict[tuple[str, str], float], bool]
"""Reported rate, averaged flows, shortfalls and the convergence verdict."""


def solve(graph: NetworkGraph, opts: SolverOptions | None = None) -> FlowSolution:
    """Run the primal-dual iteration and return the window-averaged solution.

    Starts from empty queues and C = 0. The reported multicast rate is the
    averaged C capped by the rate the averaged flows deliver. The solution
    has converged when no node falls short of conservation by `tolerance`
    or more and at most UNDELIVERED_SLACK of the averaged C goes undelivered.
    With `opts.early_stop` this is checked every CHECK_EVERY iterations
    after the first half of the budget; otherwise only at the end.
    """
    opts = opts or SolverOptions()
    dests = graph.destinations
    transmitters = graph.transmitters
    routable = {
        (node, dest): _routable_neighbors(graph, node, dest)
        for node in transmitters
        for dest in dests
    }
    caps = {node: _node_rate_cap(graph, node) for node in transmitters}
    flow_keys: list[FlowKey] = [
        (link.sender, link.receiver, dest) for dest in dests for link in graph.links
    ]
    column = {key: col for col, key in enumerate(flow_keys)}

    total = opts.max_iters
    rate_prefix = np.zeros(total + 1)
    flow_prefix = np.zeros((total + 1, len(flow_keys)))
    rate_history = np.zeros((total, len(transmitters)))
    min_iters = max(CHECK_EVERY, total // 2)

    def window_start(t: int) -> int:
        return int(t * (1.0 - opts.averaging_window))

    def averages(t: int) -> tuple[float, FloatArray]:
        start = window_start(t)
        count = t - start
        rate = (rate_prefix[t] - rate_prefix[start]) / count
        return float(rate), (flow_prefix[t] - flow_prefix[start]) / count

    def assess(t: int) -> _Assessment:
        offered, mean_flows = averages(t)
        flows = {key: float(mean_flows[col]) for key, col in column.items()}
        rate = min(offered, delivered_rate(graph, flows))
        residuals = conservation_shortfall(graph, flows, rate)
        worst = max(residuals.values(), default=0.0)
        logger.debug(
            "iteration %d: C=%.6g delivered %.6g, max shortfall %.3g",
            t,
            offered,
            rate,
            worst,
        )
        ok = worst < opts.tolerance and offered - rate <= UNDELIVERED_SLACK * offered
        return rate, flows, residuals, ok

    logger.info(
        "flow solver: %d transmitters, %d destinations, up to %d iterations",
        len(transmitters),
        len(dests),
        total,
    )
    state = DualState.initial(graph)
    c = 0.0
    priorities: dict[tuple[str, str], tuple[str, ...]] = {}
    trace: list[TracePoint] = []
    t = 0
    for t in range(1, total + 1):
        gamma_t, eta_t = opts.step_sizes(t, len(dests))
        flows: dict[FlowKey, float] = {}
        for k, node in enumerate(transmitters):
            ranked = {d: neighbor_priorities(state, node, d, graph) for d in dests}
            usable = tuple(_restrict(ranked[d], routable[(node, d)]) for d in dests)
            rate = _best_rate(graph, node, usable, opts, caps[node])
            rate_history[t - 1, k] = rate
            for dest, ranking in zip(dests, usable):
                priorities[(node, dest)] = ranked[dest].order
                for j, x in assign_flows(graph, node, rate, ranking.order).items():
                    flows[(node, j, dest)] = x

        c = update_source_rate(c, state, gamma_t, graph)
        state = update_duals(state, flows, c, eta_t, graph)

        rate_prefix[t] = rate_prefix[t - 1] + c
        flow_prefix[t] = flow_prefix[t - 1]
        for flow_key, x in flows.items():
            flow_prefix[t, column[flow_key]] += x

        if opts.trace_every and t % opts.trace_every == 0:
            trace.append(TracePoint(t, c, averages(t)[0]))
        checkpoint = t >= min_iters and t % CHECK_EVERY == 0
        if opts.early_stop and checkpoint and assess(t)[3]:
            break

    multicast_rate, mean_flows, residuals, converged = assess(t)
    window = rate_history[window_start(t) : t]
    mixtures = {}
    for k, node in enumerate(transmitters):
        values, counts = np.unique(
            np.round(window[:, k], MIXTURE_DECIMALS), return_counts=True
        )
        mixtures[node] = tuple(
            (float(v), float(n) / window.shape[0]) for v, n in zip(values, counts)
        )

    solution = FlowSolution(
        multicast_rate=multicast_rate,
        flows=mean_flows,
        node_rates={
            node: float(window[:, k].mean()) for k, node in enumerate(transmitters)
        },
        rate_mixtures=mixtures,
        priorities=priorities,
        residuals=residuals,
        duals=state,
        converged=converged,
        iterations=t,
        trace=tuple(trace),
    )
    if not converged:
        logger.warning(
            "flow solver stopped after %d iterations without converging"
            " (C=%.6g delivered, max shortfall %.3g)",
            t,
            multicast_rate,
            solution.max_residual,
        )
    else:
        logger.info("flow solver: C=%.6g after %d iterations", multicast_rate, t)
    return solution
