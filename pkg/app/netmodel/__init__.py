"""Network model: graphs, cuts, the fixed-rate cut-set rate and the ergodic
upper bound.
"""

from netmodel.bounds import (
    CutEstimate,
    UpperBound,
    capacity_upper_bound,
    spread_ratio,
    theorem2_gap_constant,
)
from netmodel.cuts import (
    Cut,
    CutEnumerationError,
    CutError,
    CutsetResult,
    RateAssignment,
    cut_value,
    cutset_rate_fixed,
    enumerate_cuts,
)
from netmodel.graph import GraphValidationError, NetworkGraph

__all__ = [
    "Cut",
    "CutEnumerationError",
    "CutError",
    "CutEstimate",
    "CutsetResult",
    "GraphValidationError",
    "NetworkGraph",
    "RateAssignment",
    "UpperBound",
    "capacity_upper_bound",
    "cut_value",
    "cutset_rate_fixed",
    "enumerate_cuts",
    "spread_ratio",
    "theorem2_gap_constant",
]
