"""Convex-roof engine for rank-based coherence and entanglement measures."""
from .bounds import (
    best_lower_bound,
    exact_qubit_lcn,
    l1_lower_bound,
    relative_entropy_lower_bound,
)
from .decomposition import (
    LOG_COHERENCE,
    MAX_COHERENCE,
    Score,
    member_score,
    mixer_from_vectors,
    parametrize_decomposition,
    range_factor,
    refine_with_patterns,
    roof_objective,
)
from .search import (
    Budget,
    RoofProblem,
    RoofSolution,
    UnsupportedDimension,
    coherence_number,
    estimate_roof,
    lcn_quantum_incoherent,
    log_coherence_number,
    schmidt_measure,
)

__all__ = [
    "LOG_COHERENCE",
    "MAX_COHERENCE",
    "Budget",
    "RoofProblem",
    "RoofSolution",
    "Score",
    "UnsupportedDimension",
    "best_lower_bound",
    "coherence_number",
    "estimate_roof",
    "exact_qubit_lcn",
    "l1_lower_bound",
    "lcn_quantum_incoherent",
    "log_coherence_number",
    "member_score",
    "mixer_from_vectors",
    "parametrize_decomposition",
    "range_factor",
    "refine_with_patterns",
    "relative_entropy_lower_bound",
    "roof_objective",
    "schmidt_measure",
]
