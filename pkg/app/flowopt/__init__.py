"""Flow optimization of the multicast rate with opportunistic forwarding."""

from flowopt.duals import (
    DualState,
    DualStateError,
    FlowKey,
    update_duals,
    update_source_rate,
)
from flowopt.polymatroid import (
    FlowSolverError,
    Priorities,
    assign_flows,
    max_flow_lp,
    neighbor_priorities,
    polymatroid_capacity,
    rate_objective,
)
from flowopt.solver import (
    FlowSolution,
    SolverOptions,
    SolverOptionsError,
    StepMode,
    TracePoint,
    conservation_shortfall,
    delivered_rate,
    select_rate,
    solve,
)

__all__ = [
    "DualState",
    "DualStateError",
    "FlowKey",
    "FlowSolution",
    "FlowSolverError",
    "Priorities",
    "SolverOptions",
    "SolverOptionsError",
    "StepMode",
    "TracePoint",
    "assign_flows",
    "conservation_shortfall",
    "delivered_rate",
    "max_flow_lp",
    "neighbor_priorities",
    "polymatroid_capacity",
    "rate_objective",
    "select_rate",
    "solve",
    "update_duals",
    "update_source_rate",
]
