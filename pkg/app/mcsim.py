"""Seeded packet-level Monte Carlo checks of the analytic rates.

Every slot draws a fresh Rayleigh power gain h ~ Exp(sigma2) per link; a
packet sent at rate R with power P is decoded iff 0.5 log2(1 + hP) >= R,
i.e. iff h >= (2^(2R) - 1) / P.

Point-to-point runs draw from `default_rng(seed)`. Network runs give every
link its own child stream, `SeedSequence(seed).spawn(|E|)` in graph link
order, so a link's fades do not depend on how the others are iterated.
"""

import logging
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from channel import snr_gap
from config import MC_BATCH_SIZE, STDERR_BATCHES
from netmodel import NetworkGraph, RateAssignment
from numerics import FloatArray
from ptp import LayeredScheme

logger = logging.getLogger(__name__)

MIN_PACKETS = 1_000
PTP_LINK = ("tx", "rx")


class SimulationError(ValueError):
    """Raised for simulation inputs outside the supported model."""


@dataclass(frozen=True, slots=True)
class SimConfig:
    packets: int
    seed: int = 0
    report_stderr: bool = True

    def __post_init__(self) -> None:
        if self.packets < MIN_PACKETS:
            raise SimulationError(
                f"Need at least {MIN_PACKETS} packets, got {self.packets}"
            )


@dataclass(frozen=True, slots=True, kw_only=True)
class SimReport:
    """Outcome of one simulation run.

    `stderr` is None when the config does not ask for it. Delivery and
    retention fractions count slots, not bits.
    """

    empirical_rate: float
    stderr: float | None
    per_link_delivery: dict[tuple[str, str], float]
    slots_run: int
    per_layer_delivery: tuple[float, ...] = ()
    per_link_retention: dict[tuple[str, str], float] = field(default_factory=dict)


def _check_ptp(power: float, sigma2: float) -> None:
    if not power > 0:
        raise SimulationError(f"Power must be positive, got {power}")
    if not 0 < sigma2 <= 1:
        raise SimulationError(f"sigma2 must lie in (0, 1], got {sigma2}")


def _batches(total: int) -> Iterator[int]:
    done = 0
    while done < total:
        size = min(MC_BATCH_SIZE, total - done)
        yield size
        done += size


def _mean_and_stderr(total: float, squares: float, count: int) -> tuple[float, float]:
    mean = total / count
    variance = max(squares / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(variance / count)


def _simulate_layers(
    thresholds: Sequence[float],
    credits: Sequence[float],
    sigma2: float,
    cfg: SimConfig,
) -> tuple[float, float, tuple[float, ...]]:
    rng = np.random.default_rng(cfg.seed)
    total = squares = 0.0
    decoded = np.zeros(len(thresholds))
    for size in _batches(cfg.packets):
        gains = rng.exponential(sigma2, size)
        slot_bits = np.zeros(size)
        for k, (threshold, bits) in enumerate(zip(thresholds, credits)):
            hit = gains >= threshold
            decoded[k] += np.count_nonzero(hit)
            slot_bits += bits * hit
        total += float(slot_bits.sum())
        squares += float(np.square(slot_bits).sum())
    mean, stderr = _mean_and_stderr(total, squares, cfg.packets)
    return mean, stderr, tuple(float(d) / cfg.packets for d in decoded)


def simulate_ptp_fixed(
    rate: float, power: float, sigma2: float, cfg: SimConfig
) -> SimReport:
    """Credit `rate` bits in every slot whose gain supports it."""
    _check_ptp(power, sigma2)
    if rate < 0:
        raise SimulationError(f"Rate must be >= 0, got {rate}")
    mean, stderr, (delivery,) = _simulate_layers(
        (snr_gap(rate) / power,), (rate,), sigma2, cfg
    )
    logger.info("fixed-rate simulation: %.6g over %d slots", mean, cfg.packets)
    return SimReport(
        empirical_rate=mean,
        stderr=stderr if cfg.report_stderr else None,
        per_link_delivery={PTP_LINK: delivery},
        slots_run=cfg.packets,
    )


def simulate_ptp_layered(
    scheme: LayeredScheme, power: float, sigma2: float, cfg: SimConfig
) -> SimReport:
    """Successive decoding: each slot credits every layer whose threshold the
    gain clears. Draws match `simulate_ptp_fixed`, so a one-layer scheme
    credits exactly the same slots.
    """
    _check_ptp(power, sigma2)
    if not math.isclose(scheme.power, power, rel_tol=1e-12):
        raise SimulationError(f"Scheme spans power {scheme.power}, simulated at {power}")
    mean, stderr, per_layer = _simulate_layers(
        scheme.thresholds(), scheme.physical_rates(), sigma2, cfg
    )
    logger.info(
        "%d-layer simulation: %.6g over %d slots", scheme.layers, mean, cfg.packets
    )
    return SimReport(
        empirical_rate=mean,
        stderr=stderr if cfg.report_stderr else None,
        per_link_delivery={PTP_LINK: per_layer[-1]},
        slots_run=cfg.packets,
        per_layer_delivery=per_layer,
    )


def _orderings(
    graph: NetworkGraph, priorities: Mapping[str, Sequence[str]]
) -> dict[str, tuple[str, ...]]:
    orders = {}
    for node in graph.transmitters:
        order = tuple(priorities.get(node, graph.out_neighbors(node)))
        if sorted(order) != sorted(graph.out_neighbors(node)):
            raise SimulationError(
                f"Priorities of node {node!r} must order its out-neighbors"
                f" {sorted(graph.out_neighbors(node))}, got {list(order)}"
            )
        orders[node] = order
    return orders


def _max_flow(graph: NetworkGraph, capacities: Mapping[tuple[str, str], float]) -> float:
    flow_graph = nx.DiGraph()
    flow_graph.add_nodes_from(graph.node_ids)
    for (sender, receiver), capacity in capacities.items():
        flow_graph.add_edge(sender, receiver, capacity=capacity)
    return float(
        nx.maximum_flow_value(flow_graph, graph.source, graph.destinations[0])
    )


def simulate_network_unicast(
    graph: NetworkGraph,
    rates: RateAssignment,
    priorities: Mapping[str, Sequence[str]],
    cfg: SimConfig,
) -> SimReport:
    """Slotted fluid simulation of priority-drop forwarding to one destination.

    Every transmitter sends at its (point) rate in every slot. Among the
    out-neighbors that decode, only the highest-priority one keeps the
    packet. The end-to-end rate is the max-flow over link capacities
    R_i * (fraction of slots link (i, j) kept the packet), i.e. ideal
    end-to-end erasure coding. Nodes missing from `priorities` use their
    out-neighbor order. The stderr comes from batch means over
    STDERR_BATCHES consecutive blocks of slots.
    """
    if len(graph.destinations) != 1:
        raise SimulationError(
            "Packet simulation covers a single destination;"
            f" got {len(graph.destinations)}"
        )
    rates.require(graph)
    orders = _orderings(graph, priorities)
    batches = min(STDERR_BATCHES, cfg.packets)
    streams = {
        link.key: np.random.default_rng(child)
        for link, child in zip(
            graph.links, np.random.SeedSequence(cfg.seed).spawn(len(graph.links))
        )
    }

    delivered = {link.key: 0 for link in graph.links}
    retained = {link.key: 0 for link in graph.links}
    batch_rates = []
    for block in np.array_split(np.arange(cfg.packets), batches):
        size = block.size
        gains: dict[tuple[str, str], FloatArray] = {}
        for link in graph.links:
            draws = [streams[link.key].exponential(link.sigma2, n) for n in _batches(size)]
            gains[link.key] = np.concatenate(draws)
        block_kept = {}
        for node, order in orders.items():
            rate, power = rates.rates[node], graph.power(node)
            silent = rate == 0 or power == 0
            threshold = snr_gap(rate) / power if not silent else math.inf
            taken = np.zeros(size, dtype=bool)
            for j in order:
                hit = gains[(node, j)] >= threshold
                kept = hit & ~taken
                taken |= hit
                delivered[(node, j)] += int(np.count_nonzero(hit))
                block_kept[(node, j)] = int(np.count_nonzero(kept))
        for key, count in block_kept.items():
            retained[key] += count
        batch_rates.append(
            _max_flow(
                graph,
                {key: rates.rates[key[0]] * n / size for key, n in block_kept.items()},
            )
        )

    retention = {key: n / cfg.packets for key, n in retained.items()}
    rate = _max_flow(
        graph, {key: rates.rates[key[0]] * share for key, share in retention.items()}
    )
    stderr = float(np.std(batch_rates, ddof=1) / math.sqrt(batches))
    logger.info(
        "network simulation: %.6g +/- %.2g over %d slots", rate, stderr, cfg.packets
    )
    return SimReport(
        empirical_rate=rate,
        stderr=stderr if cfg.report_stderr else None,
        per_link_delivery={key: n / cfg.packets for key, n in delivered.items()},
        slots_run=cfg.packets,
        per_link_retention=retention,
    )
