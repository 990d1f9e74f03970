"""TechRank centrality for company-technology bipartite graphs."""

__version__ = "0.1.0"

from .engine import (
    ConvergenceTrace,
    Exponents,
    RankState,
    RunConfig,
    RunResult,
    Status,
    SweepResult,
    TransitionPair,
    build_transitions,
    initial_weights,
    run_to_convergence,
    step,
    sweep,
)
from .graph import (
    BipartiteGraph,
    EntityId,
    Layer,
    build_graph,
    connected_components,
    degrees,
    graph_from_edges,
    prune,
)
from .metrics import Correlation, Ranking, spearman, weights_to_ranking

__all__ = [
    "BipartiteGraph",
    "ConvergenceTrace",
    "Correlation",
    "EntityId",
    "Exponents",
    "Layer",
    "RankState",
    "Ranking",
    "RunConfig",
    "RunResult",
    "Status",
    "SweepResult",
    "TransitionPair",
    "build_graph",
    "build_transitions",
    "connected_components",
    "degrees",
    "graph_from_edges",
    "initial_weights",
    "prune",
    "run_to_convergence",
    "spearman",
    "step",
    "sweep",
    "weights_to_ranking",
]
