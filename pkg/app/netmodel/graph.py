"""Acyclic wireless network with a single source and a set of destinations."""

from dataclasses import dataclass, field, replace
from functools import cached_property

import networkx as nx

from channel import Link, NodeConfig


class GraphValidationError(ValueError):
    """Raised when a network description is inconsistent.

    `element` names the offending part, e.g. "links.2.to" or "destinations".
    """

    def __init__(self, element: str, message: str) -> None:
        super().__init__(f"{element}: {message}")
        self.element = element


@dataclass(frozen=True, kw_only=True)
class NetworkGraph:
    nodes: tuple[NodeConfig, ...]
    links: tuple[Link, ...]
    source: str
    destinations: tuple[str, ...]
    _powers: dict[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        powers: dict[str, float] = {}
        for i, node in enumerate(self.nodes):
            if node.id in powers:
                raise GraphValidationError(f"nodes.{i}.id", f"duplicate node {node.id!r}")
            powers[node.id] = node.power
        object.__setattr__(self, "_powers", powers)

        seen: set[tuple[str, str]] = set()
        for i, link in enumerate(self.links):
            for end, name in (("from", link.sender), ("to", link.receiver)):
                if name not in powers:
                    raise GraphValidationError(f"links.{i}.{end}", f"unknown node {name!r}")
            if link.key in seen:
                raise GraphValidationError(
                    f"links.{i}", f"duplicate link {link.sender}->{link.receiver}"
                )
            seen.add(link.key)

        if self.source not in powers:
            raise GraphValidationError("source", f"unknown node {self.source!r}")
        if not self.destinations:
            raise GraphValidationError("destinations", "at least one is required")
        if len(set(self.destinations)) != len(self.destinations):
            raise GraphValidationError("destinations", "duplicate destination")
        for i, dest in enumerate(self.destinations):
            if dest not in powers:
                raise GraphValidationError(f"destinations.{i}", f"unknown node {dest!r}")
            if dest == self.source:
                raise GraphValidationError(
                    f"destinations.{i}", "the source cannot be a destination"
                )

        digraph = self.to_digraph()
        if not nx.is_directed_acyclic_graph(digraph):
            cycle = nx.find_cycle(digraph)
            raise GraphValidationError(
                "links", f"graph has a cycle through {cycle[0][0]!r}"
            )
        reachable = nx.descendants(digraph, self.source)
        for i, dest in enumerate(self.destinations):
            if dest not in reachable:
                raise GraphValidationError(
                    f"destinations.{i}",
                    f"node {dest!r} is not reachable from {self.source!r}",
                )

    def to_digraph(self) -> "nx.DiGraph[str]":
        digraph: nx.DiGraph[str] = nx.DiGraph()
        digraph.add_nodes_from(node.id for node in self.nodes)
        for link in self.links:
            digraph.add_edge(link.sender, link.receiver, sigma2=link.sigma2)
        return digraph

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(node.id for node in self.nodes)

    def power(self, node: str) -> float:
        return self._powers[node]

    @cached_property
    def _out(self) -> dict[str, tuple[Link, ...]]:
        return {
            node: tuple(link for link in self.links if link.sender == node)
            for node in self.node_ids
        }

    @cached_property
    def _in(self) -> dict[str, tuple[Link, ...]]:
        return {
            node: tuple(link for link in self.links if link.receiver == node)
            for node in self.node_ids
        }

    def out_links(self, node: str) -> tuple[Link, ...]:
        return self._out[node]

    def in_links(self, node: str) -> tuple[Link, ...]:
        return self._in[node]

    def out_neighbors(self, node: str) -> tuple[str, ...]:
        return tuple(link.receiver for link in self._out[node])

    def link(self, sender: str, receiver: str) -> Link:
        for candidate in self._out[sender]:
            if candidate.receiver == receiver:
                return candidate
        raise KeyError((sender, receiver))

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        """Nodes in a deterministic topological order (ties by node id)."""
        return tuple(nx.lexicographical_topological_sort(self.to_digraph()))

    @cached_property
    def transmitters(self) -> tuple[str, ...]:
        """Nodes with at least one out-link, in topological order."""
        return tuple(node for node in self.topological_order if self._out[node])

    def can_reach(self, node: str, target: str) -> bool:
        return node == target or target in self._descendants[node]

    @cached_property
    def _descendants(self) -> dict[str, frozenset[str]]:
        digraph = self.to_digraph()
        return {node: frozenset(nx.descendants(digraph, node)) for node in self.node_ids}

    def with_uniform_power(self, power: float) -> "NetworkGraph":
        """Copy of the graph with every node transmitting at `power`."""
        nodes = tuple(NodeConfig(id=node.id, power=power) for node in self.nodes)
        return replace(self, nodes=nodes)

    def with_link(self, link: Link) -> "NetworkGraph":
        return replace(self, links=(*self.links, link))
