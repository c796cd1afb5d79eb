"""Removal-robust streaming summaries for monotone submodular maximization.

Build a compact summary in one pass over a stream, survive the adversarial
removal of elements from it, and answer cardinality-constrained maximization
queries from what remains.
"""

from .errors import (
    DocumentError,
    GuardExceeded,
    ParameterError,
    ParseError,
    SubstreamError,
    UnknownElementError,
)
from .exact import RobustnessReport, brute_force_opt, verify_robustness
from .grid import MemoryReport, ThresholdGrid, static_grid
from .objectives import (
    CoverageObjective,
    ModularObjective,
    MovieObjective,
    ObjectiveOracle,
    PropertyReport,
    build_coverage,
    build_movie_objective,
    marginal_gain,
    property_check,
)
from .query import (
    QueryResult,
    greedy,
    query_summary_greedy,
    query_summary_sieve,
    random_baseline,
    sieve_stream,
)
from .summary import (
    Bucket,
    PlacementDecision,
    StructurePlan,
    Summary,
    build_summary,
    ceil_log2,
    guarantee_ratio,
    plan_structure,
    pruned_scan_floor,
    summary_from_document,
    summary_to_document,
    threshold_base,
    width_for_removals,
)

__version__ = "0.1.0"

__all__ = [
    "Bucket",
    "CoverageObjective",
    "DocumentError",
    "GuardExceeded",
    "MemoryReport",
    "ModularObjective",
    "MovieObjective",
    "ObjectiveOracle",
    "ParameterError",
    "ParseError",
    "PlacementDecision",
    "PropertyReport",
    "QueryResult",
    "RobustnessReport",
    "StructurePlan",
    "SubstreamError",
    "Summary",
    "ThresholdGrid",
    "UnknownElementError",
    "brute_force_opt",
    "build_coverage",
    "build_movie_objective",
    "build_summary",
    "ceil_log2",
    "greedy",
    "guarantee_ratio",
    "marginal_gain",
    "plan_structure",
    "property_check",
    "pruned_scan_floor",
    "query_summary_greedy",
    "query_summary_sieve",
    "random_baseline",
    "sieve_stream",
    "static_grid",
    "summary_from_document",
    "summary_to_document",
    "threshold_base",
    "verify_robustness",
    "width_for_removals",
]
