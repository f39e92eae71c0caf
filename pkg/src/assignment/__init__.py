"""From the clique factor to a balanced assignment of H onto the clusters."""

from .balance import BalanceReport, DirectedMoveGraph, balance_loads, build_F2
from .distribute import AuxBipartite, build_F1, cluster_degree_matrix, distribute_V0
from .lp import LPInstance, LPResult, solve_assignment_lp
from .mapping import (
    AssignmentMap,
    ConcentrationReport,
    MappingResult,
    Placement,
    ReassignmentReport,
    boundary_layers,
    concentration_report,
    map_balanced,
    map_component,
    map_vertices,
    reassign_all,
    reassign_boundary,
    unmapped_edges,
)
from .parameters import AlphaThreshold, Parameters, alpha_threshold

__all__ = [
    "AlphaThreshold",
    "AssignmentMap",
    "AuxBipartite",
    "BalanceReport",
    "ConcentrationReport",
    "DirectedMoveGraph",
    "LPInstance",
    "LPResult",
    "MappingResult",
    "Parameters",
    "Placement",
    "ReassignmentReport",
    "alpha_threshold",
    "balance_loads",
    "boundary_layers",
    "build_F1",
    "build_F2",
    "cluster_degree_matrix",
    "concentration_report",
    "distribute_V0",
    "map_balanced",
    "map_component",
    "map_vertices",
    "reassign_all",
    "reassign_boundary",
    "solve_assignment_lp",
    "unmapped_edges",
]
