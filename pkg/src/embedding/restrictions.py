"""Restriction sets T_x for H-vertices with neighbours in other cliques."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from config import settings
from src.assignment import AssignmentMap
from src.errors import InconsistencyError, PreconditionError
from src.factor import CliqueFactor
from src.graph import Graph
from src.regularity import RegularPartition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RestrictionSet:
    """Host vertices of kappa(x) that x may use."""

    x: int
    cluster: int
    allowed: FrozenSet[int]
    neighbor_clusters: Tuple[int, ...]

    def fraction(self, cluster_size: int) -> float:
        return len(self.allowed) / cluster_size if cluster_size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "cluster": self.cluster,
            "allowed": sorted(self.allowed),
            "neighbor_clusters": list(self.neighbor_clusters),
        }


def cross_clique_edges(h: Graph, kappa: AssignmentMap, factor: CliqueFactor) -> List[Tuple[int, int]]:
    """E': H-edges whose endpoints sit in clusters of different cliques."""
    clique_of = {v: index for index, clique in enumerate(factor.cliques) for v in clique}
    k = kappa.kappa
    return [(x, y) for x, y in sorted(h.edges) if clique_of[int(k[x])] != clique_of[int(k[y])]]


def build_restrictions(
    h: Graph,
    kappa: AssignmentMap,
    part: RegularPartition,
    factor: CliqueFactor,
    cross_edges: Optional[List[Tuple[int, int]]] = None,
    core: Optional[Sequence[FrozenSet[int]]] = None,
) -> Dict[int, RestrictionSet]:
    """T_x for every endpoint x of a cross-clique edge.

    T_x keeps the vertices of kappa(x) with more than (d - eps')|V_j| neighbours in G'
    in every cluster V_j holding an H-neighbour of x from another clique. Each such
    cluster may disqualify at most eps'm vertices of a regular pair, so at most
    c eps'm vertices of the cluster's core are lost, c being the number of those
    clusters; more raises InconsistencyError. ``core`` holds each cluster's vertices
    before load balancing (vertices moved in later carry no such guarantee); without it
    the whole cluster is the core. A vertex whose other-clique neighbours sit on more
    than 2k - 2 clusters raises PreconditionError.
    """
    if cross_edges is None:
        cross_edges = cross_clique_edges(h, kappa, factor)
    if not cross_edges:
        return {}
    eps = part.effective_eps
    clique_of = {v: index for index, clique in enumerate(factor.cliques) for v in clique}
    adj = part.pruned_host.adjacency
    k = kappa.kappa
    most = 2 * factor.k - 2

    endpoints: Set[int] = {v for edge in cross_edges for v in edge}
    restrictions: Dict[int, RestrictionSet] = {}
    for x in sorted(endpoints):
        own = int(k[x])
        relevant = sorted({int(k[y]) for y in h.neighbors(x) if clique_of[int(k[y])] != clique_of[own]})
        if len(relevant) > most:
            raise PreconditionError(
                f"H-vertex {x} has neighbours on {len(relevant)} clusters of other cliques, more than 2k-2 = {most}",
                {"x": x, "clusters": relevant},
            )
        allowed = set(part.clusters[own])
        for j in relevant:
            target = part.clusters[j]
            floor = (part.d - eps) * len(target)
            allowed = {v for v in allowed if len(adj[v] & target) > floor}
        base = part.clusters[own] & core[own] if core is not None else part.clusters[own]
        lost = len(base - allowed)
        limit = len(relevant) * eps * part.m
        if lost > limit + 1e-9:
            raise InconsistencyError(
                f"T_{x} drops {lost} of the {len(base)} core vertices of cluster {own}, more than "
                f"{len(relevant)} eps' m = {limit:.2f}; a pair around cluster {own} is not regular",
                {"x": x, "cluster": own, "size": len(allowed), "lost": lost, "limit": limit},
            )
        restrictions[x] = RestrictionSet(x, own, frozenset(allowed), tuple(relevant))

    per_cluster = restricted_per_cluster(restrictions)
    busiest = max(per_cluster.items(), key=lambda item: item[1])
    logger.debug(f"{len(restrictions)} restriction sets; cluster {busiest[0]} carries {busiest[1]}")
    return restrictions


def restricted_per_cluster(restrictions: Dict[int, RestrictionSet]) -> Dict[int, int]:
    per_cluster: Dict[int, int] = {}
    for r in restrictions.values():
        per_cluster[r.cluster] = per_cluster.get(r.cluster, 0) + 1
    return per_cluster


def crowded_clusters(
    restrictions: Dict[int, RestrictionSet], part: RegularPartition, alpha_bl: Optional[float] = None
) -> Dict[int, int]:
    """Clusters carrying more than alpha_bl |V_i| restricted vertices, with their counts."""
    alpha_bl = settings.ALPHA_BL if alpha_bl is None else alpha_bl
    crowded = {
        c: count
        for c, count in restricted_per_cluster(restrictions).items()
        if count > alpha_bl * len(part.clusters[c])
    }
    for c, count in sorted(crowded.items()):
        logger.warning(
            f"cluster {c} carries {count} restricted vertices, more than {alpha_bl:g} of its {len(part.clusters[c])}"
        )
    return crowded
