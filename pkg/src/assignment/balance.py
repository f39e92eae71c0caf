"""Equalizing cluster sizes with their loads along the directed move graph F2."""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from src.errors import ArgumentError, HostRegimeError, InconsistencyError
from src.factor import CliqueFactor
from src.graph import Graph
from src.regularity import RegularPartition, default_delta

from .mapping import AssignmentMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectedMoveGraph:
    """F2 on the clusters: (i, j) when V_i is adjacent in G_r to every cluster of clq(V_j).

    A vertex may then leave V_i for V_j without losing its clique partners.
    """

    ell: int
    arcs: FrozenSet[Tuple[int, int]]

    def has_arc(self, i: int, j: int) -> bool:
        return (i, j) in self.arcs

    def out_neighbors(self, i: int) -> List[int]:
        return sorted(j for a, j in self.arcs if a == i)

    def centers(self, source: int, target: int) -> List[int]:
        """Clusters p with arcs source -> p -> target."""
        return [p for p in self.out_neighbors(source) if (p, target) in self.arcs]

    def to_dict(self) -> Dict[str, Any]:
        return {"ell": self.ell, "arcs": sorted(list(a) for a in self.arcs)}


def build_F2(gr: Graph, factor: CliqueFactor) -> DirectedMoveGraph:
    partners = factor.partner_map()
    arcs = set()
    for j in gr.vertices():
        need = partners.get(j, [])
        for i in gr.vertices():
            if i != j and all(gr.has_edge(i, p) for p in need):
                arcs.add((i, j))
    return DirectedMoveGraph(gr.n, frozenset(arcs))


@dataclass
class BalanceReport:
    moves: List[Dict[str, Any]] = field(default_factory=list)
    direct: int = 0
    two_step: int = 0
    vertex_level: int = 0
    initial_imbalance: int = 0
    precondition_warnings: List[str] = field(default_factory=list)

    @property
    def total_moves(self) -> int:
        return len(self.moves)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "moves": self.moves,
            "direct": self.direct,
            "two_step": self.two_step,
            "vertex_level": self.vertex_level,
            "initial_imbalance": self.initial_imbalance,
            "precondition_warnings": self.precondition_warnings,
        }


class _Clusters:
    """Mutable cluster membership used while balancing."""

    def __init__(self, g: Graph, clusters, partners: Dict[int, List[int]], threshold: float):
        self.adj = g.adjacency
        self.members: List[Set[int]] = [set(c) for c in clusters]
        self.partners = partners
        self.threshold = threshold

    def strength(self, v: int, destination: int) -> int:
        """Fewest neighbours v has in a cluster of clq(destination)."""
        return min(
            (len(self.adj[v] & self.members[s]) for s in self.partners.get(destination, [])),
            default=len(self.adj[v]),
        )

    def movable(self, source: int, destination: int) -> Optional[int]:
        """Vertex of ``source`` with the most neighbours into clq(destination), if any
        has at least the threshold in every such cluster."""
        best, best_key = None, None
        for v in self.members[source]:
            s = self.strength(v, destination)
            if s < self.threshold:
                continue
            key = (s, -v)
            if best_key is None or key > best_key:
                best, best_key = v, key
        return best

    def move(self, v: int, source: int, destination: int) -> None:
        self.members[source].discard(v)
        self.members[destination].add(v)


def balance_loads(
    g: Graph,
    part: RegularPartition,
    kappa: AssignmentMap,
    factor: CliqueFactor,
    f2: DirectedMoveGraph,
    rng: np.random.Generator,
    delta: Optional[float] = None,
) -> Tuple[RegularPartition, BalanceReport]:
    """Move host vertices between clusters until |V_i| = |L_i| for every i.

    Surplus clusters give one vertex at a time to deficit clusters: along an F2 arc, or
    along a two-arc path through a uniformly random center, or, failing both, directly
    when some vertex happens to have enough neighbours in the destination's clique.
    kappa is never touched.
    """
    if delta is None:
        delta = part.delta if part.delta is not None else default_delta(part.d, part.eps, factor.k)
    loads = kappa.loads()
    if len(loads) != part.ell:
        raise ArgumentError(f"assignment covers {len(loads)} clusters, partition has {part.ell}")
    sizes = np.array([len(c) for c in part.clusters], dtype=np.int64)
    if part.V0 or sizes.sum() != loads.sum():
        raise ArgumentError(
            f"cluster sizes sum to {int(sizes.sum())} (|V0| = {len(part.V0)}) "
            f"but H has {int(loads.sum())} assigned vertices"
        )

    report = BalanceReport(initial_imbalance=int(np.abs(sizes - loads).sum()))
    limit = 5 * part.eps * factor.k * part.m
    worst = int(np.abs(sizes - loads).max()) if part.ell else 0
    if worst >= limit:
        message = f"largest ||V_i| - |L_i|| = {worst} is not below 5 eps k m = {limit:g}"
        report.precondition_warnings.append(message)
        logger.warning(message)

    state = _Clusters(g, part.clusters, factor.partner_map(), delta * part.m)
    surplus = sizes - loads
    while np.any(surplus != 0):
        source = int(np.argmax(surplus))
        target = int(np.argmin(surplus))
        move = _direct(state, f2, source, target) or _two_step(state, f2, source, target, rng)
        if move is None:
            move = _vertex_level(state, source, target)
        if move is None:
            if not f2.has_arc(source, target) and not f2.centers(source, target):
                raise HostRegimeError(
                    f"F2 has no path of length at most two from cluster {source} to cluster {target}",
                    {"source": source, "target": target},
                )
            raise InconsistencyError(
                f"no vertex can move from cluster {source} towards cluster {target} "
                f"with {state.threshold:g} neighbours in every clique partner",
                {"source": source, "target": target},
            )
        kind, path = move
        setattr(report, kind, getattr(report, kind) + 1)
        report.moves.append({"kind": kind, "path": path})
        surplus[source] -= 1
        surplus[target] += 1

    clusters = tuple(frozenset(c) for c in state.members)
    logger.info(
        f"Load balancing: {report.total_moves} moves ({report.direct} direct, {report.two_step} two-step, "
        f"{report.vertex_level} vertex-level)"
    )
    return replace(part, clusters=clusters), report


def _direct(state: _Clusters, f2: DirectedMoveGraph, source: int, target: int):
    if not f2.has_arc(source, target):
        return None
    v = state.movable(source, target)
    if v is None:
        return None
    state.move(v, source, target)
    return "direct", [[source, target, v]]


def _two_step(state: _Clusters, f2: DirectedMoveGraph, source: int, target: int, rng: np.random.Generator):
    centers = f2.centers(source, target)
    for index in rng.permutation(len(centers)):
        center = centers[int(index)]
        v = state.movable(source, center)
        if v is None:
            continue
        state.move(v, source, center)
        w = state.movable(center, target)
        if w is None:
            state.move(v, center, source)
            continue
        state.move(w, center, target)
        return "two_step", [[source, center, v], [center, target, w]]
    return None


def _vertex_level(state: _Clusters, source: int, target: int):
    v = state.movable(source, target)
    if v is None:
        return None
    state.move(v, source, target)
    logger.debug(f"vertex-level move of {v} from cluster {source} to cluster {target}")
    return "vertex_level", [[source, target, v]]
