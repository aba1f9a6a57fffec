"""Graph pattern mining on a modeled HBM processing-in-memory device."""

from .enumerate import WorkVector, oracle_count, reference_count
from .graph import CsrGraph, GraphFormatError, from_edges, gen_er_graph, gen_skewed_graph, normalize_degree_order
from .memory import AccessTier, PimTopology
from .patterns import INDUCED, NON_INDUCED, LoopPlan, Pattern, builtin_pattern, cached_plan, compile_plan
from .placement import Placement, apply_duplication, duplication_boundary, place_round_robin
from .simulator import SimOptions, SimReport, SimTrace, simulate

__all__ = [
    "AccessTier", "CsrGraph", "GraphFormatError", "INDUCED", "LoopPlan", "NON_INDUCED", "Pattern",
    "PimTopology", "Placement", "SimOptions", "SimReport", "SimTrace", "WorkVector",
    "apply_duplication", "builtin_pattern", "cached_plan", "compile_plan", "duplication_boundary",
    "from_edges", "gen_er_graph", "gen_skewed_graph", "normalize_degree_order", "oracle_count",
    "place_round_robin", "reference_count", "simulate",
]
