"""Pydantic models for graph files and the JSON documents the CLI writes."""

from collections.abc import Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from channel import ChannelParameterError, Link, NodeConfig
from flowopt import FlowSolution, SolverOptions
from mcsim import SimReport
from netmodel import (
    Cut,
    CutsetResult,
    GraphValidationError,
    NetworkGraph,
    RateAssignment,
    UpperBound,
)


class NodeDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    power: float = Field(ge=0, allow_inf_nan=False)


class LinkDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    sender: str = Field(alias="from")
    receiver: str = Field(alias="to")
    sigma2: float = Field(gt=0, le=1)


class GraphDocument(BaseModel):
    """Graph file: nodes with powers, links with gain variances, one source
    and the destinations.
    """

    model_config = ConfigDict(extra="forbid")

    nodes: list[NodeDocument] = Field(min_length=1)
    links: list[LinkDocument]
    source: str
    destinations: list[str]

    def to_network(self) -> NetworkGraph:
        links = []
        for i, link in enumerate(self.links):
            try:
                links.append(Link(link.sender, link.receiver, link.sigma2))
            except ChannelParameterError as e:
                raise GraphValidationError(f"links.{i}", str(e)) from e
        return NetworkGraph(
            nodes=tuple(NodeConfig(node.id, node.power) for node in self.nodes),
            links=tuple(links),
            source=self.source,
            destinations=tuple(self.destinations),
        )

    @classmethod
    def from_network(cls, graph: NetworkGraph) -> "GraphDocument":
        return cls(
            nodes=[NodeDocument(id=n.id, power=n.power) for n in graph.nodes],
            links=[
                LinkDocument(
                    sender=link.sender, receiver=link.receiver, sigma2=link.sigma2
                )
                for link in graph.links
            ],
            source=graph.source,
            destinations=list(graph.destinations),
        )


def parse_graph(text: str | bytes) -> NetworkGraph:
    """Validate a graph file. Every problem surfaces as GraphValidationError
    naming the JSON path of the offending element.
    """
    try:
        document = GraphDocument.model_validate_json(text)
    except ValidationError as e:
        error = e.errors()[0]
        element = ".".join(str(part) for part in error["loc"]) or "$"
        raise GraphValidationError(element, error["msg"]) from e
    return document.to_network()


# Solution export


class FlowDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    sender: str = Field(alias="from")
    receiver: str = Field(alias="to")
    destination: str
    flow: float


class PriorityDocument(BaseModel):
    node: str
    destination: str
    order: list[str]


class ResidualDocument(BaseModel):
    node: str
    destination: str
    residual: float


class TraceDocument(BaseModel):
    iteration: int
    source_rate: float
    averaged_rate: float


class SolverSettings(BaseModel):
    max_iters: int
    step_mode: str
    gamma0: float | None
    eta0: float | None
    averaging_window: float
    tolerance: float
    early_stop: bool = True
    seed: int


class FlowSolutionDocument(BaseModel):
    multicast_rate: float
    converged: bool
    iterations: int
    max_residual: float
    node_rates: dict[str, float]
    active_rates: dict[str, float]
    rate_mixtures: dict[str, list[tuple[float, float]]]
    flows: list[FlowDocument]
    priorities: list[PriorityDocument]
    residuals: list[ResidualDocument]
    trace: list[TraceDocument] = []
    settings: SolverSettings

    @classmethod
    def from_solution(
        cls, solution: FlowSolution, opts: SolverOptions
    ) -> "FlowSolutionDocument":
        return cls(
            multicast_rate=solution.multicast_rate,
            converged=solution.converged,
            iterations=solution.iterations,
            max_residual=solution.max_residual,
            node_rates=solution.node_rates,
            active_rates=solution.active_rates(),
            rate_mixtures={
                node: list(atoms) for node, atoms in solution.rate_mixtures.items()
            },
            flows=[
                FlowDocument(sender=s, receiver=r, destination=d, flow=x)
                for (s, r, d), x in solution.flows.items()
            ],
            priorities=[
                PriorityDocument(node=node, destination=d, order=list(order))
                for (node, d), order in solution.priorities.items()
            ],
            residuals=[
                ResidualDocument(node=node, destination=d, residual=value)
                for (node, d), value in solution.residuals.items()
            ],
            trace=[
                TraceDocument(
                    iteration=p.iteration,
                    source_rate=p.source_rate,
                    averaged_rate=p.averaged_rate,
                )
                for p in solution.trace
            ],
            settings=SolverSettings(
                max_iters=opts.max_iters,
                step_mode=opts.step_mode.value,
                gamma0=opts.gamma0,
                eta0=opts.eta0,
                averaging_window=opts.averaging_window,
                tolerance=opts.tolerance,
                early_stop=opts.early_stop,
                seed=opts.seed,
            ),
        )

    def simulation_inputs(
        self, destination: str
    ) -> tuple[RateAssignment, dict[str, list[str]]]:
        """Rates used while transmitting and the final priority lists for
        one destination, as the packet simulation consumes them.
        """
        priorities = {
            entry.node: entry.order
            for entry in self.priorities
            if entry.destination == destination
        }
        return RateAssignment(rates=dict(self.active_rates)), priorities


class CutDocument(BaseModel):
    source_side: list[str]
    boundary: list[str]
    value: float


def _cut_document(cut: Cut, value: float) -> CutDocument:
    return CutDocument(
        source_side=sorted(cut.source_side),
        boundary=sorted(cut.boundary),
        value=value,
    )


class CutsetDocument(BaseModel):
    rate: float
    rates: dict[str, float]
    binding_cut: list[str]
    cuts: list[CutDocument]

    @classmethod
    def from_result(cls, result: CutsetResult) -> "CutsetDocument":
        return cls(
            rate=result.rate,
            rates=dict(result.assignment.rates),
            binding_cut=sorted(result.binding_cut.source_side),
            cuts=[_cut_document(cut, value) for cut, value in result.cut_values],
        )


class CutEstimateDocument(CutDocument):
    stderr: float


class BoundDocument(BaseModel):
    value: float
    stderr: float
    samples: int
    seed: int
    cuts: list[CutEstimateDocument]

    @classmethod
    def from_bound(cls, bound: UpperBound, samples: int, seed: int) -> "BoundDocument":
        return cls(
            value=bound.value,
            stderr=bound.stderr,
            samples=samples,
            seed=seed,
            cuts=[
                CutEstimateDocument(
                    source_side=sorted(e.cut.source_side),
                    boundary=sorted(e.cut.boundary),
                    value=e.mean,
                    stderr=e.stderr,
                )
                for e in bound.per_cut
            ],
        )


class LinkStatsDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    sender: str = Field(alias="from")
    receiver: str = Field(alias="to")
    delivery: float
    retention: float | None = None


class SimReportDocument(BaseModel):
    mode: str
    seed: int
    empirical_rate: float
    stderr: float | None
    slots_run: int
    links: list[LinkStatsDocument]
    per_layer_delivery: list[float] = []

    @classmethod
    def from_report(cls, report: SimReport, mode: str, seed: int) -> "SimReportDocument":
        retention: Mapping[tuple[str, str], float] = report.per_link_retention
        return cls(
            mode=mode,
            seed=seed,
            empirical_rate=report.empirical_rate,
            stderr=report.stderr,
            slots_run=report.slots_run,
            links=[
                LinkStatsDocument(
                    sender=s, receiver=r, delivery=value, retention=retention.get((s, r))
                )
                for (s, r), value in report.per_link_delivery.items()
            ],
            per_layer_delivery=list(report.per_layer_delivery),
        )
