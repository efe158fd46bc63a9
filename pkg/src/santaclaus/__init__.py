"""Restricted-assignment submodular max-min fair allocation solver.

The pipeline follows: configuration LP by column generation, fat/thin
clustering of the fractional solution, sampled cluster configurations, a
weighted hypergraph with marginal-gain weights, dyadic rounding into a
grouped unweighted hypergraph, a nested resource hierarchy, selection by
constrained resampling, flow-based reconstruction, and final assembly.
Brute-force oracles validate every stage on small instances.
"""

from .model import (
    Configuration,
    GroupedHypergraph,
    LinearSantaInstance,
    RelaxedMatching,
    RngSeed,
    SantaInstance,
    WeightedHypergraph,
    validate_instance,
    verify_relaxed_matching,
)
from .submodular import ValuationOracle, knapsack_max, strict_knapsack_max
from .configlp import solve_config_lp, exact_config_lp_small, separate
from .oracles import exact_min_alpha, exact_santa_opt
from .pipeline import PipelineOptions, solve_matching, solve_santa

__all__ = [
    "Configuration",
    "GroupedHypergraph",
    "LinearSantaInstance",
    "PipelineOptions",
    "RelaxedMatching",
    "RngSeed",
    "SantaInstance",
    "ValuationOracle",
    "WeightedHypergraph",
    "exact_config_lp_small",
    "exact_min_alpha",
    "exact_santa_opt",
    "knapsack_max",
    "separate",
    "solve_config_lp",
    "solve_matching",
    "solve_santa",
    "strict_knapsack_max",
    "validate_instance",
    "verify_relaxed_matching",
]
