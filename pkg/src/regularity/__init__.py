"""Regular pairs, degree-form partitions and reduced graphs."""

from .pairs import (
    PairCertificate,
    PairStatus,
    SuperRegularity,
    Witness,
    certify_pair,
    check_regular_exact,
    check_regular_heuristic,
    check_regular_sampled,
    low_degree_count,
    qualifying_size,
    super_regularity,
)
from .partition import (
    EDGE_RULES,
    DegreeBoundCheck,
    ReducedGraph,
    RegularPartition,
    default_delta,
    degree_form_prune,
    reduced_graph,
    restrict_to_clusters,
    singleton_partition,
    super_regularize,
)

__all__ = [
    "EDGE_RULES",
    "DegreeBoundCheck",
    "PairCertificate",
    "PairStatus",
    "ReducedGraph",
    "RegularPartition",
    "SuperRegularity",
    "Witness",
    "certify_pair",
    "check_regular_exact",
    "check_regular_heuristic",
    "check_regular_sampled",
    "default_delta",
    "degree_form_prune",
    "low_degree_count",
    "qualifying_size",
    "reduced_graph",
    "restrict_to_clusters",
    "singleton_partition",
    "super_regularity",
    "super_regularize",
]
