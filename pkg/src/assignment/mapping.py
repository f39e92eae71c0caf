"""Randomized mapping of H onto the clique factor and boundary reassignment.

The separator S and every part of H - S are each sent to one uniformly random clique
of the factor under a uniformly random permutation of the color classes. Edges between
S and a part can then land on non-adjacent clusters; the boundary of each part is
reassigned backwards through the color classes to repair that.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from config import settings
from src.errors import ArgumentError, HostRegimeError, InconsistencyError
from src.factor import CliqueFactor
from src.graph import Coloring, Graph
from src.separability import Separation

logger = logging.getLogger(__name__)


@dataclass
class AssignmentMap:
    """kappa: H-vertex -> cluster id (-1 while unassigned)."""

    kappa: np.ndarray
    ell: int

    @classmethod
    def empty(cls, n: int, ell: int) -> "AssignmentMap":
        return cls(np.full(n, -1, dtype=np.int64), ell)

    def copy(self) -> "AssignmentMap":
        return AssignmentMap(self.kappa.copy(), self.ell)

    def loads(self) -> np.ndarray:
        """|L_i| for every cluster."""
        assigned = self.kappa[self.kappa >= 0]
        return np.bincount(assigned, minlength=self.ell)

    def assigned_to(self, cluster: int) -> List[int]:
        return np.flatnonzero(self.kappa == cluster).tolist()

    @property
    def complete(self) -> bool:
        return bool(np.all(self.kappa >= 0))

    def to_list(self) -> List[int]:
        return self.kappa.tolist()

    def to_dict(self) -> Dict[str, Any]:
        return {"ell": self.ell, "kappa": self.to_list(), "loads": self.loads().tolist()}


@dataclass(frozen=True)
class Placement:
    """Where one unit (S or a part of H - S) went."""

    clique: int
    permutation: Tuple[int, ...]

    def cluster_for(self, factor: CliqueFactor, color: int) -> int:
        return factor.cliques[self.clique][self.permutation[color]]


def _check_factor(factor: CliqueFactor, coloring: Coloring) -> None:
    if not factor.cliques:
        raise HostRegimeError("the clique factor is empty; nothing to map onto")
    if coloring.k > factor.k:
        raise ArgumentError(f"H needs {coloring.k} colors but the factor has cliques of size {factor.k}")


def map_component(
    component: Iterable[int],
    coloring: Coloring,
    factor: CliqueFactor,
    rng: np.random.Generator,
) -> Tuple[Dict[int, int], Placement]:
    """Send the color classes of ``component`` to the clusters of one random clique."""
    _check_factor(factor, coloring)
    clique = int(rng.integers(len(factor.cliques)))
    permutation = tuple(int(p) for p in rng.permutation(factor.k))
    placement = Placement(clique, permutation)
    assignment = {v: placement.cluster_for(factor, coloring.colors[v]) for v in component}
    return assignment, placement


@dataclass
class MappingResult:
    kappa: AssignmentMap
    separator: Placement
    components: List[Placement]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa.to_dict(),
            "separator": {"clique": self.separator.clique, "permutation": list(self.separator.permutation)},
            "components": [{"clique": p.clique, "permutation": list(p.permutation)} for p in self.components],
        }


def map_vertices(
    h: Graph,
    sep: Separation,
    coloring: Coloring,
    factor: CliqueFactor,
    rng: np.random.Generator,
) -> MappingResult:
    """Run the mapping algorithm for S and then for every part of H - S."""
    ell = max(factor.covered, default=-1) + 1
    kappa = AssignmentMap.empty(h.n, ell)
    assignment, separator = map_component(sep.S, coloring, factor, rng)
    for v, c in assignment.items():
        kappa.kappa[v] = c
    placements = []
    for part in sep.components:
        assignment, placement = map_component(part, coloring, factor, rng)
        for v, c in assignment.items():
            kappa.kappa[v] = c
        placements.append(placement)
    return MappingResult(kappa, separator, placements)


def map_balanced(
    h: Graph,
    sep: Separation,
    coloring: Coloring,
    factor: CliqueFactor,
    sizes: Sequence[int],
    limit: float,
    rng: np.random.Generator,
    retries: Optional[int] = None,
) -> Tuple[MappingResult, int, int]:
    """Redraw the mapping until every load is within ``limit`` of its cluster size.

    Returns the first draw that qualifies, else the closest of ``retries`` draws,
    with the number of draws made and its largest deviation.
    """
    retries = settings.MAP_RETRIES if retries is None else retries
    target = np.asarray(sizes, dtype=np.int64)
    best: Optional[MappingResult] = None
    best_gap = 0
    attempts = 0
    for attempts in range(1, max(retries, 1) + 1):
        mapping = map_vertices(h, sep, coloring, factor, rng)
        gap = int(np.abs(mapping.kappa.loads()[: target.size] - target).max()) if target.size else 0
        if best is None or gap < best_gap:
            best, best_gap = mapping, gap
        if gap < limit:
            break
    else:
        logger.warning(f"no mapping within {limit:g} of the cluster sizes in {attempts} draws, closest is {best_gap}")
    return best, attempts, best_gap


@dataclass
class ConcentrationReport:
    """Cluster loads over repeated runs of the mapping algorithm."""

    runs: int
    ell: int
    n: int
    max_deviation: np.ndarray
    load_std: np.ndarray
    lam: float
    exceedance: np.ndarray

    @property
    def empty(self) -> bool:
        return self.runs == 0

    @property
    def chebyshev_bound(self) -> float:
        """Chebyshev's 1/lambda^2 for lambda = sqrt(2 l)."""
        return 1 / self.lam ** 2 if self.lam else 1.0

    def summary(self) -> Dict[str, Any]:
        if self.empty:
            return {"runs": 0}
        return {
            "runs": self.runs,
            "ell": self.ell,
            "n": self.n,
            "mean_max_deviation": float(self.max_deviation.mean()),
            "p95_max_deviation": float(np.quantile(self.max_deviation, 0.95)),
            "max_load_std": float(self.load_std.max()),
            "lambda": self.lam,
            "max_exceedance": float(self.exceedance.max()),
            "chebyshev_bound": self.chebyshev_bound,
        }


def concentration_report(
    h: Graph,
    sep: Separation,
    coloring: Coloring,
    factor: CliqueFactor,
    runs: int,
    rng: np.random.Generator,
) -> ConcentrationReport:
    """Repeat the mapping ``runs`` times and record max_i |Z_i - n/l| per run.

    ``exceedance[i]`` is the observed frequency of |Z_i - n/l| >= lambda * D(Z_i),
    which Chebyshev bounds by 1/lambda^2 = 1/(2 l).
    """
    _check_factor(factor, coloring)
    cliques = np.array(factor.cliques, dtype=np.int64)
    covered = np.array(factor.covered, dtype=np.int64)
    ell = covered.size
    lam = math.sqrt(2 * ell)
    if runs <= 0:
        empty = np.zeros(0)
        return ConcentrationReport(0, ell, h.n, empty, empty, lam, empty)

    units = [sep.S] + list(sep.components)
    class_sizes = np.zeros((len(units), factor.k), dtype=np.int64)
    for u, unit in enumerate(units):
        for v in unit:
            class_sizes[u, coloring.colors[v]] += 1

    choice = rng.integers(len(cliques), size=(runs, len(units)))
    permutations = np.argsort(rng.random((runs, len(units), factor.k)), axis=2)
    # cluster receiving color class c of unit u in run r
    targets = np.take_along_axis(cliques[choice], permutations, axis=2)
    loads = np.zeros((runs, int(covered.max()) + 1), dtype=np.int64)
    run_index = np.broadcast_to(np.arange(runs)[:, None, None], targets.shape)
    np.add.at(loads, (run_index, targets), np.broadcast_to(class_sizes, targets.shape))
    loads = loads[:, covered]

    expected = h.n / ell
    deviation = np.abs(loads - expected)
    load_std = loads.std(axis=0)
    exceeded = (deviation >= lam * load_std[None, :]) & (load_std[None, :] > 0)
    exceedance = exceeded.mean(axis=0)
    return ConcentrationReport(runs, ell, h.n, deviation.max(axis=1), load_std, lam, exceedance)


@dataclass
class ReassignmentReport:
    """What boundary reassignment changed, per part of H - S."""

    reassigned: Set[int] = field(default_factory=set)
    layers: List[Dict[str, Any]] = field(default_factory=list)
    intersection_choices: int = 0
    exact_fallbacks: int = 0
    realigned: List[int] = field(default_factory=list)
    # vertices moved by realignment, which can sit far from S
    locality_exceptions: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reassigned": sorted(self.reassigned),
            "layers": self.layers,
            "intersection_choices": self.intersection_choices,
            "exact_fallbacks": self.exact_fallbacks,
            "realigned": self.realigned,
            "locality_exceptions": self.locality_exceptions,
        }


def boundary_layers(
    h: Graph, S: FrozenSet[int], component: FrozenSet[int], coloring: Coloring, k: int
) -> List[Set[int]]:
    """B'_1..B'_k (index 0..k-1) by the backward recursion over the color classes.

    B'_k = B_k and B'_{k-i} = B_{k-i} plus the neighbours in class k-i of every
    B'_{k-p}, p < i, where B = N(S) within the component.
    """
    adj = h.adjacency
    boundary = {v for v in component if adj[v] & S}
    by_class = [{v for v in boundary if coloring.colors[v] == c} for c in range(k)]
    layers: List[Set[int]] = [set() for _ in range(k)]
    layers[k - 1] = set(by_class[k - 1])
    for c in range(k - 2, -1, -1):
        layer = set(by_class[c])
        for later in layers[c + 1:]:
            for v in later:
                layer |= {u for u in adj[v] if u in component and coloring.colors[u] == c}
        layers[c] = layer
    return layers


def _common_neighbors(gr: Graph, clusters: Iterable[int]) -> Set[int]:
    result = set(gr.vertices())
    for c in clusters:
        result &= gr.adjacency[c]
    return result


def _preferred(
    candidates: Set[int], factor: CliqueFactor, separator: Optional[Placement], constraints: Iterable[int]
) -> Set[int]:
    """Candidates on the separator's clique, else on a clique that already holds a
    constraint cluster, else all of them."""
    clique_of = {v: q for q, clique in enumerate(factor.cliques) for v in clique}
    if separator is not None:
        home = {c for c in candidates if clique_of.get(c) == separator.clique}
        if home:
            return home
    near = {clique_of.get(c) for c in constraints} - {None}
    shared = {c for c in candidates if clique_of.get(c) in near}
    return shared or candidates


def reassign_boundary(
    h: Graph,
    S: FrozenSet[int],
    component: FrozenSet[int],
    coloring: Coloring,
    kappa: AssignmentMap,
    factor: CliqueFactor,
    gr: Graph,
    rng: np.random.Generator,
    separator: Optional[Placement] = None,
    report: Optional[ReassignmentReport] = None,
    allow_realign: bool = False,
) -> ReassignmentReport:
    """Move the boundary layers of ``component`` to clusters W_1..W_k adjacent to all
    clusters their H-neighbours occupy, updating ``kappa`` in place.

    W_i comes from the intersection of the G_r-neighbourhoods of kappa(S^p) for p != i,
    of kappa(B'_p) for p > i and of W_p for p < i, restricted to clusters adjacent to
    every cluster an H-neighbour of B'_i keeps; when that is empty the exact
    constraints alone are used. The draw is uniform over the candidates on the
    separator's clique when there are any, else over those sharing a clique with a
    constraint cluster, else over all; this keeps the cross-clique neighbours of a
    moved vertex on few clusters. With no candidate at all HostRegimeError is raised,
    unless ``allow_realign`` moves the whole component onto the separator's placement
    (counted as locality exceptions).
    """
    report = ReassignmentReport() if report is None else report
    k = factor.k
    adj = h.adjacency
    layers = boundary_layers(h, S, component, coloring, k)
    if not any(layers):
        return report

    moving = set().union(*layers)
    s_clusters = {}
    for v in S:
        s_clusters.setdefault(coloring.colors[v], int(kappa.kappa[v]))
    original = {c: {int(kappa.kappa[v]) for v in layers[c]} for c in range(k)}

    chosen: List[Optional[int]] = [None] * k
    plan: Dict[int, int] = {}
    for i in range(k):
        if not layers[i]:
            continue
        layer_constraints = [s_clusters[p] for p in s_clusters if p != i]
        for p in range(i + 1, k):
            layer_constraints.extend(original[p])
        layer_constraints.extend(w for p, w in enumerate(chosen[:i]) if w is not None)

        exact_constraints = set()
        for v in layers[i]:
            for u in adj[v]:
                if u in moving:
                    placed = plan.get(u)
                    if placed is not None:
                        exact_constraints.add(placed)
                else:
                    exact_constraints.add(int(kappa.kappa[u]))

        exact = _common_neighbors(gr, exact_constraints)
        candidates = _common_neighbors(gr, layer_constraints) & exact
        if candidates:
            report.intersection_choices += 1
        elif exact:
            candidates = exact
            report.exact_fallbacks += 1
            logger.debug(f"W_{i + 1}: layer intersection empty, using the exact constraint set")
        else:
            if separator is None or not allow_realign:
                raise HostRegimeError(
                    f"no cluster is adjacent to all of {sorted(exact_constraints)} in the reduced graph",
                    {"layer": i + 1, "constraints": sorted(exact_constraints)},
                )
            for v in component:
                kappa.kappa[v] = separator.cluster_for(factor, coloring.colors[v])
            report.realigned.append(min(component))
            report.locality_exceptions += len(component)
            logger.debug(f"component at {min(component)} realigned onto the separator's clique")
            return report

        candidates = _preferred(candidates, factor, separator, exact_constraints | set(layer_constraints))
        pick = sorted(candidates)[int(rng.integers(len(candidates)))]
        chosen[i] = pick
        for v in layers[i]:
            plan[v] = pick

    for v, c in plan.items():
        kappa.kappa[v] = c
    report.reassigned |= set(plan)
    report.layers.append(
        {
            "component": min(component),
            "sizes": [len(layer) for layer in layers],
            "clusters": chosen,
        }
    )
    return report


def unmapped_edges(h: Graph, kappa: AssignmentMap, gr: Graph) -> List[Tuple[int, int]]:
    """H-edges whose endpoints sit on clusters that are not adjacent in G_r."""
    k = kappa.kappa
    return [(u, v) for u, v in sorted(h.edges) if not gr.has_edge(int(k[u]), int(k[v]))]


def reassign_all(
    h: Graph,
    sep: Separation,
    coloring: Coloring,
    mapping: MappingResult,
    factor: CliqueFactor,
    gr: Graph,
    rng: np.random.Generator,
    allow_realign: bool = False,
) -> ReassignmentReport:
    """Reassign every part's boundary (largest parts first), then scan every H-edge.

    ``allow_realign`` opts into the whole-component fallback of reassign_boundary.
    """
    report = ReassignmentReport()
    order = sorted(sep.components, key=lambda c: (-len(c), min(c)))
    for part in order:
        reassign_boundary(
            h, sep.S, part, coloring, mapping.kappa, factor, gr, rng, mapping.separator, report, allow_realign
        )
    bad = unmapped_edges(h, mapping.kappa, gr)
    if bad:
        u, v = bad[0]
        raise InconsistencyError(
            f"{len(bad)} H-edges map to non-adjacent clusters, e.g. ({u}, {v})",
            {"edges": [list(e) for e in bad[:20]]},
        )
    logger.info(
        f"Boundary reassignment: {len(report.reassigned)} vertices moved, "
        f"{report.exact_fallbacks} exact fallbacks, {len(report.realigned)} parts realigned"
    )
    return report
