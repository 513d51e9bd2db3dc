"""Superposition coding with a finite number of virtual users (layers).

A scheme splits [0, P] at breakpoints z_0 = 0 < z_1 < ... < z_K = P. Layer k
is decoded when the gain reaches (2^(2 R_k) - 1) / P and then contributes
0.5 * log2((beta_k + z_k) / (beta_k + z_{k-1})) bits, beta_k = P / (2^(2R_k) - 1).
Successive decoding needs R_1 >= R_2 >= ... >= R_K.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from channel import LN2, ChannelParameterError, snr_gap, success_prob
from numerics import FloatArray, RealInterval, maximize_1d
from ptp.fixed_rate import fixed_rate_optimum, rate_cap

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_POINTS = 200
# Coarser grids for the nested breakpoint search of K-layer schemes.
BREAKPOINT_GRID = 33
BREAKPOINT_REFINEMENTS = 3
BREAKPOINT_SWEEPS = 4


class SchemeError(ValueError):
    """Raised for a structurally malformed layered scheme."""


class ConditionAError(ValueError):
    """Raised when layer rates increase, so a higher layer could be decoded
    without the layers beneath it.
    """

    def __init__(self, layer_rates: tuple[float, ...]) -> None:
        super().__init__(f"Layer rates must be non-increasing, got {layer_rates}")
        self.layer_rates = layer_rates


@dataclass(frozen=True, slots=True)
class LayeredScheme:
    breakpoints: tuple[float, ...]
    layer_rates: tuple[float, ...]

    def __post_init__(self) -> None:
        points, rates = self.breakpoints, self.layer_rates
        if len(points) < 2 or len(rates) != len(points) - 1:
            raise SchemeError(
                f"{len(points)} breakpoints do not delimit {len(rates)} layers"
            )
        if points[0] != 0:
            raise SchemeError(f"First breakpoint must be 0, got {points[0]}")
        if not all(math.isfinite(z) for z in points) or any(
            hi <= lo for lo, hi in zip(points, points[1:])
        ):
            raise SchemeError(f"Breakpoints must strictly increase, got {points}")
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise SchemeError(f"Layer rates must be finite and >= 0, got {rates}")
        if any(hi > lo for lo, hi in zip(rates, rates[1:])):
            raise ConditionAError(rates)

    @classmethod
    def single(cls, power: float, rate: float) -> "LayeredScheme":
        return cls(breakpoints=(0.0, power), layer_rates=(rate,))

    @classmethod
    def two_layer(
        cls, power: float, alpha: float, rate1: float, rate2: float
    ) -> "LayeredScheme":
        """Two layers: the first spans the fraction `alpha` of the power."""
        return cls(breakpoints=(0.0, alpha * power, power), layer_rates=(rate1, rate2))

    @property
    def power(self) -> float:
        return self.breakpoints[-1]

    @property
    def layers(self) -> int:
        return len(self.layer_rates)

    def thresholds(self) -> tuple[float, ...]:
        """Gain needed to decode each layer."""
        return tuple(snr_gap(rate) / self.power for rate in self.layer_rates)

    def physical_rates(self) -> tuple[float, ...]:
        """Bits carried by each layer once decoded."""
        spans = zip(self.layer_rates, self.breakpoints, self.breakpoints[1:])
        return tuple(
            float(_layer_rate(snr_gap(rate), lo, hi, self.power))
            for rate, lo, hi in spans
        )


def _layer_rate(
    gap: float | FloatArray, lo: float, hi: float, power: float
) -> float | FloatArray:
    # log((beta + hi) / (beta + lo)) written in terms of gap = P / beta.
    return np.log1p((hi - lo) * gap / (power + lo * gap)) / (2.0 * LN2)


def _layer_term(
    rates: FloatArray, lo: float, hi: float, power: float, sigma2: float
) -> FloatArray:
    gap = snr_gap(rates)
    return _layer_rate(gap, lo, hi, power) * np.exp(-gap / (power * sigma2))


def layered_throughput(scheme: LayeredScheme, power: float, sigma2: float) -> float:
    """Average delivered rate: sum of layer rates weighted by decode odds."""
    if not math.isclose(scheme.power, power, rel_tol=1e-12):
        raise SchemeError(f"Scheme spans power {scheme.power}, evaluated at {power}")
    return math.fsum(
        rate_k * success_prob(rate, power, sigma2)
        for rate_k, rate in zip(scheme.physical_rates(), scheme.layer_rates)
    )


@dataclass(frozen=True, slots=True)
class TwoLayerOptimum:
    rate1: float
    rate2: float
    alpha: float
    throughput: float

    def scheme(self, power: float) -> LayeredScheme:
        return LayeredScheme.two_layer(power, self.alpha, self.rate1, self.rate2)


def _best_for_alpha(
    alpha: float, power: float, sigma2: float, search: RealInterval
) -> TwoLayerOptimum:
    rate1, value1 = maximize_1d(
        lambda r: _layer_term(r, 0.0, alpha * power, power, sigma2), search
    )
    rate2, value2 = maximize_1d(
        lambda r: _layer_term(r, alpha * power, power, power, sigma2), search
    )
    if rate2 > rate1:
        # On the boundary R1 = R2 the layers telescope into one fixed rate.
        best = fixed_rate_optimum(power, sigma2)
        return TwoLayerOptimum(
            rate1=best.rate, rate2=best.rate, alpha=alpha, throughput=best.throughput
        )
    return TwoLayerOptimum(
        rate1=rate1, rate2=rate2, alpha=alpha, throughput=value1 + value2
    )


def _scan_alphas(
    alphas: FloatArray, power: float, sigma2: float, search: RealInterval
) -> TwoLayerOptimum:
    best: TwoLayerOptimum | None = None
    for alpha in alphas:
        candidate = _best_for_alpha(float(alpha), power, sigma2, search)
        if best is None or candidate.throughput > best.throughput:
            best = candidate
    assert best is not None
    return best


def optimize_two_layer(
    power: float, sigma2: float, alpha_points: int = DEFAULT_ALPHA_POINTS
) -> TwoLayerOptimum:
    """Best two-layer scheme.

    For each power split alpha the two layers are optimized separately by
    line search; a pair violating R2 <= R1 is replaced by the best point on
    the R1 = R2 boundary. Alpha is scanned on `alpha_points` interior points
    of (0, 1), then once more around the best one. Ties keep the smaller alpha.
    """
    if not power > 0 or not sigma2 > 0:
        raise ChannelParameterError(f"Need P > 0 and sigma2 > 0, got {power}, {sigma2}")
    search = RealInterval(0.0, rate_cap(power, sigma2))
    grid = np.linspace(0.0, 1.0, alpha_points + 2)
    coarse = _scan_alphas(grid[1:-1], power, sigma2, search)

    i = int(np.searchsorted(grid, coarse.alpha))
    fine_grid = np.linspace(grid[i - 1], grid[i + 1], alpha_points + 2)[1:-1]
    fine = _scan_alphas(fine_grid, power, sigma2, search)
    if fine.throughput > coarse.throughput or (
        fine.throughput == coarse.throughput and fine.alpha < coarse.alpha
    ):
        return fine
    return coarse


@dataclass(frozen=True, slots=True)
class LayeredOptimum:
    scheme: LayeredScheme
    throughput: float


def _rates_for_breakpoints(
    breakpoints: tuple[float, ...], power: float, sigma2: float, search: RealInterval
) -> tuple[tuple[float, ...], float]:
    """Best non-increasing layer rates for fixed breakpoints.

    Each layer is line searched on its own; adjacent layers whose rates
    increase are pooled into one block sharing a rate and searched again.
    """
    # Blocks of consecutive layers: (first layer, last layer, rate, value).
    blocks: list[tuple[int, int, float, float]] = []
    for k in range(len(breakpoints) - 1):
        lo, hi = breakpoints[k], breakpoints[k + 1]
        rate, value = maximize_1d(lambda r: _layer_term(r, lo, hi, power, sigma2), search)
        blocks.append((k, k, rate, value))
        while len(blocks) > 1 and blocks[-2][2] < blocks[-1][2]:
            first = blocks[-2][0]
            last = blocks[-1][1]
            lo, hi = breakpoints[first], breakpoints[last + 1]
            rate, value = maximize_1d(
                lambda r: _layer_term(r, lo, hi, power, sigma2), search
            )
            blocks[-2:] = [(first, last, rate, value)]

    rates: list[float] = []
    for first, last, rate, _ in blocks:
        rates.extend([rate] * (last - first + 1))
    return tuple(rates), math.fsum(block[3] for block in blocks)


def optimize_layered(power: float, sigma2: float, layers: int) -> LayeredOptimum:
    """Best K-layer scheme found by growing the (K-1)-layer optimum.

    The top layer of the previous optimum is split in two at equal rate
    (same throughput), then interior breakpoints are improved one at a time
    by line search, re-optimizing all layer rates at every trial point.
    """
    if layers < 1:
        raise SchemeError(f"Need at least one layer, got {layers}")
    if layers == 1:
        best = fixed_rate_optimum(power, sigma2)
        return LayeredOptimum(LayeredScheme.single(power, best.rate), best.throughput)

    previous = optimize_layered(power, sigma2, layers - 1).scheme
    top = previous.breakpoints[-2]
    breakpoints = (*previous.breakpoints[:-1], 0.5 * (top + power), power)
    rates = (*previous.layer_rates, previous.layer_rates[-1])
    value = layered_throughput(LayeredScheme(breakpoints, rates), power, sigma2)
    search = RealInterval(0.0, rate_cap(power, sigma2))
    margin = 1e-9 * power

    for sweep in range(BREAKPOINT_SWEEPS):
        improved = False
        for k in range(1, layers):
            lo, hi = breakpoints[k - 1] + margin, breakpoints[k + 1] - margin
            if hi <= lo:
                continue

            def objective(zs: FloatArray, k: int = k) -> FloatArray:
                values = []
                for z in zs:
                    trial = (*breakpoints[:k], float(z), *breakpoints[k + 1 :])
                    values.append(_rates_for_breakpoints(trial, power, sigma2, search)[1])
                return np.asarray(values)

            z_best, _ = maximize_1d(
                objective, RealInterval(lo, hi), BREAKPOINT_GRID, BREAKPOINT_REFINEMENTS
            )
            trial = (*breakpoints[:k], z_best, *breakpoints[k + 1 :])
            trial_rates, trial_value = _rates_for_breakpoints(trial, power, sigma2, search)
            if trial_value > value + 1e-15:
                breakpoints, rates, value = trial, trial_rates, trial_value
                improved = True
        logger.debug("layered K=%d sweep %d: %.12g", layers, sweep, value)
        if not improved:
            break

    scheme = LayeredScheme(breakpoints, rates)
    return LayeredOptimum(scheme, layered_throughput(scheme, power, sigma2))
