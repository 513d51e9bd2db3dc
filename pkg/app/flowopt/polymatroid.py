"""Broadcast capacity of a transmitting node and its greedy (priority) split.

A node sending at rate R reaches a set Z of its out-neighbors with rate
R * (1 - prod_{j in Z} eps_j(R)). The achievable link flows form a
polymatroid; serving neighbors in priority order reaches its extreme points.
"""

import itertools
import logging
from collections.abc import Iterable, Sequence
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from channel import broadcast_throughput, erasure_prob, success_prob
from flowopt.duals import DualState
from netmodel import NetworkGraph, RateAssignment
from numerics import FloatArray

logger = logging.getLogger(__name__)


class FlowSolverError(RuntimeError):
    """Raised when the max-flow linear program has no optimal solution."""


class Priorities(NamedTuple):
    """Out-neighbors ordered by non-increasing weight [q_i - q_j]+."""

    order: tuple[str, ...]
    weights: tuple[float, ...]


def neighbor_priorities(
    state: DualState,
    node: str,
    dest: str,
    graph: NetworkGraph,
) -> Priorities:
    """Rank the out-neighbors of `node` for destination `dest` by queue
    differential; ties go to the smaller node id.
    """
    own = state.queue(node, dest)
    ranked = sorted(
        (
            (max(own - state.queue(j, dest), 0.0), j)
            for j in graph.out_neighbors(node)
        ),
        key=lambda item: (-item[0], item[1]),
    )
    return Priorities(
        order=tuple(j for _, j in ranked), weights=tuple(w for w, _ in ranked)
    )


def assign_flows(
    graph: NetworkGraph, node: str, rate: float, order: Sequence[str]
) -> dict[str, float]:
    """Greedy split of a broadcast at `rate` along `order`: the k-th neighbor
    gets the packets it decodes while every higher-priority neighbor missed
    them, R * prod_{j<k} eps_j * (1 - eps_k).
    """
    power = graph.power(node)
    if power == 0 or rate == 0:
        return {j: 0.0 for j in order}
    flows: dict[str, float] = {}
    missed = 1.0
    for j in order:
        sigma2 = graph.link(node, j).sigma2
        flows[j] = rate * missed * success_prob(rate, power, sigma2)
        missed *= erasure_prob(rate, power, sigma2)
    return flows


def polymatroid_capacity(
    graph: NetworkGraph, node: str, rate: float, subset: Iterable[str]
) -> float:
    """Rate that reaches at least one neighbor of `subset`."""
    sigma2s = tuple(graph.link(node, j).sigma2 for j in subset)
    return float(broadcast_throughput(rate, graph.power(node), sigma2s))


def rate_objective(
    graph: NetworkGraph,
    node: str,
    priorities: Sequence[Priorities],
    rates: FloatArray,
) -> FloatArray:
    """Weighted delivered rate sum_d sum_k w_k x_k(R) on a grid of rates R,
    in the telescoped form R * sum_k (w_k - w_{k+1}) (1 - prod_{j<=k} eps_j).
    """
    power = graph.power(node)
    if power == 0:
        return np.zeros_like(rates)
    erasures: dict[str, FloatArray] = {}
    total = np.zeros_like(rates)
    for order, weights in priorities:
        missed = np.ones_like(rates)
        for k, j in enumerate(order):
            if j not in erasures:
                erasures[j] = erasure_prob(rates, power, graph.link(node, j).sigma2)
            missed = missed * erasures[j]
            step = weights[k] - (weights[k + 1] if k + 1 < len(weights) else 0.0)
            if step:
                total = total + step * (1.0 - missed)
    return rates * total


def max_flow_lp(graph: NetworkGraph, assignment: RateAssignment) -> float:
    """Largest common rate C deliverable to every destination when each
    node's link flows only need to satisfy its broadcast polymatroid
    (every subset constraint, per destination). Exponential in out-degree.
    """
    assignment.require(graph)
    links = graph.links
    dests = graph.destinations
    width = 1 + len(dests) * len(links)

    def column(d: int, link_index: int) -> int:
        return 1 + d * len(links) + link_index

    eq_rows: list[FloatArray] = []
    eq_rhs: list[float] = []
    for d, dest in enumerate(dests):
        for node in graph.node_ids:
            row = np.zeros(width)
            for e, link in enumerate(links):
                if link.sender == node:
                    row[column(d, e)] += 1.0
                if link.receiver == node:
                    row[column(d, e)] -= 1.0
            if node == graph.source:
                row[0] = -1.0
            elif node == dest:
                row[0] = 1.0
            eq_rows.append(row)
            eq_rhs.append(0.0)

    ub_rows: list[FloatArray] = []
    ub_rhs: list[float] = []
    for node in graph.transmitters:
        out = [(e, link) for e, link in enumerate(links) if link.sender == node]
        atoms = assignment.distribution(node)
        for size in range(1, len(out) + 1):
            for subset in itertools.combinations(out, size):
                capacity = sum(
                    weight
                    * polymatroid_capacity(
                        graph, node, rate, (link.receiver for _, link in subset)
                    )
                    for rate, weight in atoms
                )
                for d in range(len(dests)):
                    row = np.zeros(width)
                    for e, _ in subset:
                        row[column(d, e)] = 1.0
                    ub_rows.append(row)
                    ub_rhs.append(capacity)

    objective = np.zeros(width)
    objective[0] = -1.0
    result = linprog(
        objective,
        A_ub=np.asarray(ub_rows),
        b_ub=np.asarray(ub_rhs),
        A_eq=np.asarray(eq_rows),
        b_eq=np.asarray(eq_rhs),
        bounds=(0.0, None),
        method="highs",
    )
    if result.status != 0:
        raise FlowSolverError(f"max-flow LP failed: {result.message}")
    logger.debug("max-flow LP value %.12g", -result.fun)
    return float(-result.fun)
