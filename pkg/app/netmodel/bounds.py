"""Ergodic cut-set upper bound on the network capacity and the gap constant
between it and the fixed-rate achievable rate.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from config import MC_BATCH_SIZE, MC_SAMPLES
from netmodel.cuts import Cut, enumerate_cuts
from netmodel.graph import NetworkGraph

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10_000
# Per-node constant of the high-SNR gap bound, in bits.
GAP_CONSTANT_PER_NODE = 0.7588


@dataclass(frozen=True, slots=True)
class CutEstimate:
    cut: Cut
    mean: float
    stderr: float


@dataclass(frozen=True, slots=True)
class UpperBound:
    value: float
    stderr: float
    per_cut: tuple[CutEstimate, ...]


def capacity_upper_bound(
    graph: NetworkGraph, mc_samples: int = MC_SAMPLES, seed: int = 0
) -> UpperBound:
    """Monte Carlo estimate of min over cuts of
    sum over boundary nodes i of E[0.5 log2(1 + P_i sum_j h_ij)], j across the cut.

    Every link draws from its own substream of `seed` (spawned in link
    order), so estimates at matched seeds move monotonically with powers.
    """
    if mc_samples < MIN_SAMPLES:
        raise ValueError(f"Need at least {MIN_SAMPLES} samples, got {mc_samples}")
    cuts = enumerate_cuts(graph)
    streams = [
        np.random.default_rng(child)
        for child in np.random.SeedSequence(seed).spawn(len(graph.links))
    ]
    index = {link.key: i for i, link in enumerate(graph.links)}

    sums = np.zeros(len(cuts))
    squares = np.zeros(len(cuts))
    done = 0
    while done < mc_samples:
        size = min(MC_BATCH_SIZE, mc_samples - done)
        gains = np.stack(
            [
                rng.exponential(link.sigma2, size)
                for rng, link in zip(streams, graph.links)
            ]
        )
        for c, cut in enumerate(cuts):
            sample = np.zeros(size)
            for node in sorted(cut.boundary):
                rows = [index[(node, j)] for j in cut.crossing(graph, node)]
                received = gains[rows].sum(axis=0)
                sample += 0.5 * np.log2(1.0 + graph.power(node) * received)
            sums[c] += sample.sum()
            squares[c] += np.square(sample).sum()
        done += size

    means = sums / mc_samples
    variances = np.maximum(squares / mc_samples - means**2, 0.0)
    stderrs = np.sqrt(variances * mc_samples / (mc_samples - 1) / mc_samples)
    per_cut = tuple(
        CutEstimate(cut=cut, mean=float(m), stderr=float(s))
        for cut, m, s in zip(cuts, means, stderrs)
    )
    tightest = min(per_cut, key=lambda estimate: estimate.mean)
    logger.info(
        "upper bound %.6g +/- %.2g at cut %s",
        tightest.mean,
        tightest.stderr,
        tightest.cut.label(),
    )
    return UpperBound(value=tightest.mean, stderr=tightest.stderr, per_cut=per_cut)


def spread_ratio(graph: NetworkGraph) -> float:
    """Largest ratio between the gain variances of two out-links of a node;
    1 when no node has two out-links.
    """
    ratio = 1.0
    for node in graph.node_ids:
        sigma2s = [link.sigma2 for link in graph.out_links(node)]
        if len(sigma2s) > 1:
            ratio = max(ratio, max(sigma2s) / min(sigma2s))
    return ratio


def theorem2_gap_constant(graph: NetworkGraph) -> float:
    """Constant part of the high-SNR bound on (upper bound - achievable rate):
    0.5 |D||V| log2(|V| * spread) + 0.7588 |D||V| bits.

    The bound also has a term growing like the sum of ln ln P_i, which is
    not included here.
    """
    nodes = len(graph.nodes)
    dests = len(graph.destinations)
    return 0.5 * dests * nodes * math.log2(
        nodes * spread_ratio(graph)
    ) + GAP_CONSTANT_PER_NODE * dests * nodes
