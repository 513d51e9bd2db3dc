"""Dual variables of the flow problem and their subgradient updates.

q[i, d] is read as the backlog of destination-d traffic at node i; the
source rate C and the queues are moved against each other each iteration.
"""

import math
from collections.abc import Mapping
from dataclasses import dataclass

from netmodel import NetworkGraph

FlowKey = tuple[str, str, str]
"""(sender, receiver, destination)."""


class DualStateError(ValueError):
    """Raised for negative queues or a non-empty destination queue."""


@dataclass(frozen=True, slots=True)
class DualState:
    queues: Mapping[tuple[str, str], float]
    iteration: int = 0

    def __post_init__(self) -> None:
        for (node, dest), value in self.queues.items():
            if not math.isfinite(value) or value < 0:
                raise DualStateError(f"Queue q[{node}, {dest}] = {value} is invalid")
            if node == dest and value != 0:
                raise DualStateError(f"Destination {dest!r} must keep an empty queue")

    @classmethod
    def initial(cls, graph: NetworkGraph) -> "DualState":
        return cls(
            queues={
                (node, dest): 0.0
                for dest in graph.destinations
                for node in graph.node_ids
            }
        )

    def queue(self, node: str, dest: str) -> float:
        return self.queues.get((node, dest), 0.0)

    def source_backlog(self, graph: NetworkGraph) -> float:
        return math.fsum(self.queue(graph.source, d) for d in graph.destinations)


def update_source_rate(
    c_t: float, state: DualState, gamma_t: float, graph: NetworkGraph
) -> float:
    """C <- [C + gamma (1 - sum_d q[s, d])]+."""
    if not gamma_t > 0:
        raise ValueError(f"Step size must be positive, got {gamma_t}")
    return max(c_t + gamma_t * (1.0 - state.source_backlog(graph)), 0.0)


def update_duals(
    state: DualState,
    flows: Mapping[FlowKey, float],
    c_t: float,
    eta_t: float,
    graph: NetworkGraph,
) -> DualState:
    """Queue step: q <- [q - eta (outflow - inflow - C)]+ at the source,
    [q - eta (outflow - inflow)]+ at relays, and 0 at the destination itself.
    """
    if not eta_t > 0:
        raise ValueError(f"Step size must be positive, got {eta_t}")
    excess: dict[tuple[str, str], float] = {}
    for (sender, receiver, dest), value in flows.items():
        excess[(sender, dest)] = excess.get((sender, dest), 0.0) + value
        excess[(receiver, dest)] = excess.get((receiver, dest), 0.0) - value

    queues: dict[tuple[str, str], float] = {}
    for dest in graph.destinations:
        for node in graph.node_ids:
            if node == dest:
                queues[(node, dest)] = 0.0
                continue
            balance = excess.get((node, dest), 0.0)
            if node == graph.source:
                balance -= c_t
            queues[(node, dest)] = max(state.queue(node, dest) - eta_t * balance, 0.0)
    return DualState(queues=queues, iteration=state.iteration + 1)
