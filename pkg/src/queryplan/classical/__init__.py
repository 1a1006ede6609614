"""LLM-free baselines: relaxation heuristics, best-first search and lazy shortest paths."""

from .heuristics import INF, HeuristicKind, RelaxedHeuristic, heuristic_value
from .lazysp import (
    EdgeBelief,
    EdgeInfo,
    EdgeStatus,
    GraphWorld,
    LazyResult,
    NoPathExists,
    RegretTrace,
    astar_edge_evaluations,
    chain_world,
    mean_regret_curve,
    random_graph_world,
    run_lazysp_psrl,
    run_random_paths,
)
from .search import GREEDY, run_best_first

__all__ = [
    "INF", "HeuristicKind", "RelaxedHeuristic", "heuristic_value", "EdgeBelief", "EdgeInfo", "EdgeStatus",
    "GraphWorld", "LazyResult", "NoPathExists", "RegretTrace", "astar_edge_evaluations", "chain_world",
    "mean_regret_curve", "random_graph_world", "run_lazysp_psrl", "run_random_paths", "GREEDY", "run_best_first",
]
