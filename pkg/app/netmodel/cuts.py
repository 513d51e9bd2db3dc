"""Cut enumeration and the fixed-rate cut-set achievable rate."""

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from channel import broadcast_throughput
from config import MAX_CUT_NODES
from netmodel.graph import NetworkGraph
from numerics import FloatArray, RealInterval, maximize_1d
from ptp.fixed_rate import fixed_rate_optimum, rate_cap

logger = logging.getLogger(__name__)

MAX_SWEEPS = 8
SWEEP_TOLERANCE = 1e-12
# Weight of the mean cut value added to the minimum so that plateaus of the
# minimum still favour rates that give the other cuts more room.
SLACK_WEIGHT = 1e-9


class CutEnumerationError(Exception):
    """Raised when a graph has too many nodes to enumerate its cuts."""

    def __init__(self, node_count: int) -> None:
        super().__init__(
            f"Graph has {node_count} nodes; cut enumeration is limited to"
            f" {MAX_CUT_NODES}. Use the flow optimizer (net optimize) instead."
        )
        self.node_count = node_count


class CutError(ValueError):
    """Raised when a cut or rate assignment does not fit the graph."""


@dataclass(frozen=True, slots=True)
class Cut:
    source_side: frozenset[str]
    boundary: frozenset[str]

    def crossing(self, graph: NetworkGraph, node: str) -> tuple[str, ...]:
        """Out-neighbors of `node` on the far side of the cut."""
        return tuple(
            j for j in graph.out_neighbors(node) if j not in self.source_side
        )

    def label(self) -> str:
        return "{" + ",".join(sorted(self.source_side)) + "}"


@dataclass(frozen=True, slots=True)
class RateAssignment:
    """Per-node transmission rates, optionally time-shared.

    `mixtures` maps a node to (rate, weight) atoms whose weights sum to 1;
    nodes without a mixture send at their rate all the time.
    """

    rates: Mapping[str, float]
    mixtures: Mapping[str, tuple[tuple[float, float], ...]] = field(
        default_factory=dict
    )

    def __post_init__(self) -> None:
        for node, rate in self.rates.items():
            if not math.isfinite(rate) or rate < 0:
                raise CutError(f"Rate of node {node!r} must be >= 0, got {rate}")
        for node, atoms in self.mixtures.items():
            if not atoms or any(r < 0 or w < 0 for r, w in atoms):
                raise CutError(f"Invalid time-sharing mixture for node {node!r}")
            if abs(math.fsum(w for _, w in atoms) - 1.0) > 1e-9:
                raise CutError(f"Mixture weights of node {node!r} do not sum to 1")

    def distribution(self, node: str) -> tuple[tuple[float, float], ...]:
        if node in self.mixtures:
            return self.mixtures[node]
        return ((self.rates[node], 1.0),)

    def require(self, graph: NetworkGraph) -> None:
        missing = [node for node in graph.transmitters if node not in self.rates]
        if missing:
            raise CutError(f"No rate assigned to transmitting nodes {missing}")


def enumerate_cuts(graph: NetworkGraph) -> list[Cut]:
    """All source-side sets that contain the source and miss a destination,
    in a deterministic order (bitmask over the sorted non-source nodes).
    """
    if len(graph.nodes) > MAX_CUT_NODES:
        raise CutEnumerationError(len(graph.nodes))
    others = sorted(node for node in graph.node_ids if node != graph.source)
    destinations = set(graph.destinations)
    cuts = []
    for mask in range(1 << len(others)):
        side = {graph.source} | {n for bit, n in enumerate(others) if mask >> bit & 1}
        if destinations <= side:
            continue
        boundary = frozenset(
            i for i in side if any(j not in side for j in graph.out_neighbors(i))
        )
        cuts.append(Cut(source_side=frozenset(side), boundary=boundary))
    logger.debug("enumerated %d cuts over %d nodes", len(cuts), len(graph.nodes))
    return cuts


def _node_term(
    graph: NetworkGraph, cut: Cut, node: str, rates: float | FloatArray
) -> float | FloatArray:
    sigma2s = tuple(graph.link(node, j).sigma2 for j in cut.crossing(graph, node))
    return broadcast_throughput(rates, graph.power(node), sigma2s)


def cut_value(cut: Cut, assignment: RateAssignment, graph: NetworkGraph) -> float:
    """Rate crossing the cut: for every boundary node, its (time-shared) rate
    times the probability that some neighbor across the cut decodes.
    """
    if not cut.boundary:
        raise CutError(f"Cut {cut.label()} has an empty boundary")
    total = []
    for node in sorted(cut.boundary):
        if node not in assignment.rates:
            raise CutError(f"No rate assigned to boundary node {node!r}")
        atoms = assignment.distribution(node)
        rates = np.asarray([r for r, _ in atoms])
        weights = np.asarray([w for _, w in atoms])
        total.append(float(np.dot(weights, _node_term(graph, cut, node, rates))))
    return math.fsum(total)


@dataclass(frozen=True, slots=True)
class CutsetResult:
    rate: float
    assignment: RateAssignment
    cut_values: tuple[tuple[Cut, float], ...]

    @property
    def binding_cut(self) -> Cut:
        return min(self.cut_values, key=lambda item: item[1])[0]


def _coordinate_ascent(
    graph: NetworkGraph,
    cuts: list[Cut],
    start: dict[str, float],
    caps: dict[str, float],
    grid: int,
) -> tuple[dict[str, float], float]:
    rates = dict(start)

    def objective_for(node: str) -> Callable[[FloatArray], FloatArray]:
        fixed = np.zeros(len(cuts))
        involved = np.zeros(len(cuts), dtype=bool)
        for c, cut in enumerate(cuts):
            for other in sorted(cut.boundary):
                if other == node:
                    involved[c] = True
                else:
                    fixed[c] += float(_node_term(graph, cut, other, rates[other]))
        terms = [c for c in range(len(cuts)) if involved[c]]

        def objective(xs: FloatArray) -> FloatArray:
            values = np.broadcast_to(fixed[:, None], (len(cuts), xs.size)).copy()
            for c in terms:
                values[c] += _node_term(graph, cuts[c], node, xs)
            return values.min(axis=0) + SLACK_WEIGHT * values.mean(axis=0)

        return objective

    def score() -> float:
        values = [
            math.fsum(
                float(_node_term(graph, cut, i, rates[i]))
                for i in sorted(cut.boundary)
            )
            for cut in cuts
        ]
        return min(values) + SLACK_WEIGHT * float(np.mean(values))

    current = score()
    for _ in range(MAX_SWEEPS):
        previous = current
        for node in graph.transmitters:
            if caps[node] <= 0:
                continue
            search = RealInterval(0.0, caps[node])
            rate, value = maximize_1d(objective_for(node), search, grid)
            if value > current:
                rates[node], current = rate, value
        if current - previous < SWEEP_TOLERANCE:
            break
    return rates, current


def cutset_rate_fixed(
    graph: NetworkGraph,
    grid: int = 256,
    restarts: int = 4,
    seed: int = 0,
    initial: Mapping[str, float] | None = None,
) -> CutsetResult:
    """Max over fixed per-node rates of the minimum cut value.

    Coordinate ascent sweeps the transmitters in topological order, starting
    from each node's fixed-rate optimum toward its strongest neighbor and from
    `restarts` uniformly random rate vectors. `initial` adds one more start
    (nodes it omits start from the warm value).
    """
    cuts = enumerate_cuts(graph)
    caps: dict[str, float] = {}
    warm: dict[str, float] = {}
    for node in graph.transmitters:
        power = graph.power(node)
        if power == 0:
            caps[node] = warm[node] = 0.0
            continue
        strongest = max(link.sigma2 for link in graph.out_links(node))
        caps[node] = rate_cap(power, strongest)
        warm[node] = fixed_rate_optimum(power, strongest).rate

    rng = np.random.default_rng(seed)
    starts = [warm] + [
        {node: float(rng.uniform(0.0, caps[node])) for node in graph.transmitters}
        for _ in range(restarts)
    ]
    if initial is not None:
        starts.append(
            {node: min(initial.get(node, warm[node]), caps[node]) for node in warm}
        )
    best_rates, best_score = warm, -math.inf
    for start in starts:
        rates, value = _coordinate_ascent(graph, cuts, start, caps, grid)
        if value > best_score:
            best_rates, best_score = rates, value

    assignment = RateAssignment(rates=best_rates)
    values = tuple((cut, cut_value(cut, assignment, graph)) for cut in cuts)
    rate = min(value for _, value in values)
    logger.info("cut-set rate %.6g over %d cuts", rate, len(cuts))
    return CutsetResult(rate=rate, assignment=assignment, cut_values=values)
