"""Point-to-point rate optimization over a Rayleigh block-fading link."""

from ptp.fixed_rate import (
    FixedRateOptimum,
    fixed_rate_optimum,
    fixed_rate_throughput,
    rate_cap,
)
from ptp.marginal import (
    MarginalRateFn,
    RateConvention,
    check_condition_a,
    decode_probability,
    decode_threshold,
    infinite_layer_throughput,
    optimal_marginal_rate,
    total_physical_rate,
)
from ptp.superposition import (
    ConditionAError,
    LayeredOptimum,
    LayeredScheme,
    SchemeError,
    TwoLayerOptimum,
    layered_throughput,
    optimize_layered,
    optimize_two_layer,
)

__all__ = [
    "ConditionAError",
    "FixedRateOptimum",
    "LayeredOptimum",
    "LayeredScheme",
    "MarginalRateFn",
    "RateConvention",
    "SchemeError",
    "TwoLayerOptimum",
    "check_condition_a",
    "decode_probability",
    "decode_threshold",
    "fixed_rate_optimum",
    "fixed_rate_throughput",
    "infinite_layer_throughput",
    "layered_throughput",
    "optimal_marginal_rate",
    "optimize_layered",
    "optimize_two_layer",
    "rate_cap",
    "total_physical_rate",
]
