"""Degree-form partitions, super-regularization and the reduced graph.

Partitions are planted by the generators or supplied by the caller; nothing here builds
one from scratch.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING, Any, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from config import settings
from src.errors import ArgumentError, InconsistencyError, StructuralError
from src.graph import Graph, min_degree

from .pairs import (
    PairCertificate,
    PairStatus,
    RandomLike,
    certify_pair,
    super_regularity,
)

if TYPE_CHECKING:
    from src.factor import CliqueFactor

logger = logging.getLogger(__name__)

EDGE_RULES = ("unrefuted", "certified")


def default_delta(d: float, eps: float, k: int) -> float:
    """(d - eps)^(2k-2) / 2."""
    return (d - eps) ** (2 * k - 2) / 2


@dataclass(frozen=True)
class RegularPartition:
    """V0, equal-sized clusters V1..Vl and the pruned host G'.

    ``discarded`` counts the vertices each cluster lost to super-regularization and
    ``eps_prime`` the regularity parameter valid after those losses.
    """

    host: Graph
    V0: FrozenSet[int]
    clusters: Tuple[FrozenSet[int], ...]
    eps: float
    d: float
    pruned_host: Graph
    certificates: Dict[Tuple[int, int], PairCertificate] = field(default_factory=dict, compare=False)
    eps_prime: Optional[float] = None
    delta: Optional[float] = None
    discarded: int = 0
    size: Optional[int] = None

    @property
    def ell(self) -> int:
        return len(self.clusters)

    @property
    def m(self) -> int:
        """Common cluster size; kept fixed once V0 is distributed and sizes drift."""
        if self.size is not None:
            return self.size
        return len(self.clusters[0]) if self.clusters else 0

    @property
    def effective_eps(self) -> float:
        return self.eps if self.eps_prime is None else self.eps_prime

    @cached_property
    def cluster_of(self) -> Dict[int, int]:
        """Vertex -> cluster index; V0 vertices are absent."""
        return {v: i for i, c in enumerate(self.clusters) for v in c}

    def certificate(self, i: int, j: int) -> Optional[PairCertificate]:
        return self.certificates.get((min(i, j), max(i, j)))

    def validate(self) -> None:
        """Raise StructuralError unless the partition invariants hold."""
        seen = set(self.V0)
        sizes = {len(c) for c in self.clusters}
        if len(sizes) > 1:
            raise StructuralError(f"clusters have unequal sizes {sorted(sizes)}")
        for i, c in enumerate(self.clusters):
            if seen & c:
                raise StructuralError(f"cluster {i} overlaps earlier sets at {sorted(seen & c)[:5]}")
            seen |= c
        if seen != set(self.host.vertices()):
            raise StructuralError("clusters and V0 do not cover the vertex set exactly")
        for u, v in self.pruned_host.edges:
            cu, cv = self.cluster_of.get(u), self.cluster_of.get(v)
            if cu is not None and cu == cv:
                raise StructuralError(f"cluster {cu} is not independent in G': edge ({u}, {v})")

    def to_dict(self, with_certificates: bool = True) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        data: Dict[str, Any] = {
            "n": self.host.n,
            "ell": self.ell,
            "m": self.m,
            "V0": sorted(self.V0),
            "clusters": [sorted(c) for c in self.clusters],
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "d": self.d,
            "delta": self.delta,
            "discarded_per_cluster": self.discarded,
            "pruned_edges": self.host.num_edges - self.pruned_host.num_edges,
        }
        if with_certificates:
            data["certificates"] = [c.to_dict() for _, c in sorted(self.certificates.items())]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], host: Graph) -> "RegularPartition":
        """Rebuild a partition of ``host``; G' drops intra-cluster edges and refuted pairs."""
        if int(data.get("n", host.n)) != host.n:
            raise ArgumentError(f"partition is for {data['n']} vertices, the host has {host.n}")
        v0, clusters = _check_clusters(host, data["clusters"], data.get("V0", ()))
        certificates = {}
        for raw in data.get("certificates") or []:
            cert = PairCertificate.from_dict(raw)
            certificates[(min(cert.pair), max(cert.pair))] = cert
        cluster_of = {v: i for i, c in enumerate(clusters) for v in c}
        removed = []
        for u, v in host.edges:
            cu, cv = cluster_of.get(u), cluster_of.get(v)
            if cu is None or cv is None:
                continue
            cert = certificates.get((min(cu, cv), max(cu, cv)))
            if cu == cv or (cert is not None and cert.refuted):
                removed.append((u, v))
        return cls(
            host=host,
            V0=v0,
            clusters=clusters,
            eps=float(data["eps"]),
            d=float(data["d"]),
            pruned_host=host.without_edges(removed),
            certificates=certificates,
        )


def _cluster_edge_counts(g: Graph, clusters: Sequence[FrozenSet[int]]) -> np.ndarray:
    """Matrix of e(V_i, V_j) over all cluster pairs."""
    indicator = np.zeros((len(clusters), g.n), dtype=np.int64)
    for i, c in enumerate(clusters):
        indicator[i, sorted(c)] = 1
    adjacency = g.adjacency_matrix().astype(np.int64)
    return indicator @ adjacency @ indicator.T


def _check_clusters(
    g: Graph, clusters: Sequence[Iterable[int]], V0: Iterable[int]
) -> Tuple[FrozenSet[int], Tuple[FrozenSet[int], ...]]:
    frozen = tuple(frozenset(int(v) for v in c) for c in clusters)
    v0 = frozenset(int(v) for v in V0)
    if not frozen:
        raise ArgumentError("a partition needs at least one cluster")
    sizes = {len(c) for c in frozen}
    if len(sizes) != 1 or 0 in sizes:
        raise ArgumentError(f"clusters must be non-empty and equal-sized, got sizes {sorted(sizes)}")
    seen = set(v0)
    for i, c in enumerate(frozen):
        bad = [v for v in c if not 0 <= v < g.n]
        if bad:
            raise ArgumentError(f"cluster {i} has vertices outside the graph: {sorted(bad)[:5]}")
        if seen & c:
            raise ArgumentError(f"cluster {i} overlaps earlier sets at {sorted(seen & c)[:5]}")
        seen |= c
    if len(seen) != g.n:
        missing = sorted(set(g.vertices()) - seen)
        raise ArgumentError(f"vertices {missing[:5]} are in no cluster and not in V0")
    return v0, frozen


def degree_form_prune(
    g: Graph,
    clusters: Sequence[Iterable[int]],
    d: Optional[float] = None,
    eps: Optional[float] = None,
    V0: Iterable[int] = (),
    rng: RandomLike = None,
    exact_cap: Optional[int] = None,
    trials: Optional[int] = None,
    method: str = "search",
) -> RegularPartition:
    """Delete the edges the degree form forbids and certify the surviving pairs.

    ``method`` picks the certifier above the exact regime (see certify_pair).

    Removed: edges inside clusters, and all edges of a pair whose density is below d or
    whose regularity is refuted. Raises StructuralError naming a vertex that lost
    (d + eps)|V| or more of its degree.
    """
    d = settings.D if d is None else d
    eps = settings.EPS if eps is None else eps
    rng = np.random.default_rng(rng)
    v0, frozen = _check_clusters(g, clusters, V0)
    n = g.n
    if len(v0) > eps * n + 1e-9:
        raise StructuralError(f"|V0| = {len(v0)} exceeds eps*n = {eps * n:g}")

    cluster_of = {v: i for i, c in enumerate(frozen) for v in c}
    counts = _cluster_edge_counts(g, frozen)
    m = len(frozen[0])
    dropped_pairs = set()
    certificates: Dict[Tuple[int, int], PairCertificate] = {}
    for i in range(len(frozen)):
        for j in range(i + 1, len(frozen)):
            pair_density = int(counts[i, j]) / (m * m)
            if pair_density < d:
                if counts[i, j]:
                    dropped_pairs.add((i, j))
                # an empty pair is trivially regular
                certificates[(i, j)] = PairCertificate((i, j), 0.0, PairStatus.CERTIFIED, eps, "emptied")
                continue
            cert = certify_pair(g, frozen[i], frozen[j], eps, (i, j), rng, exact_cap, trials, method)
            if cert.refuted:
                dropped_pairs.add((i, j))
                logger.debug(f"pair {(i, j)} refuted, its {counts[i, j]} edges are removed")
            certificates[(i, j)] = cert

    removed = []
    for u, v in g.edges:
        cu, cv = cluster_of.get(u), cluster_of.get(v)
        if cu is None or cv is None:
            continue
        if cu == cv or (min(cu, cv), max(cu, cv)) in dropped_pairs:
            removed.append((u, v))
    pruned = g.without_edges(removed)

    allowed = (d + eps) * n
    loss = g.degrees() - pruned.degrees()
    worst = int(np.argmax(loss)) if n else 0
    if n and loss[worst] >= allowed:
        raise StructuralError(
            f"vertex {worst} loses {int(loss[worst])} of its {g.degree(worst)} edges, "
            f"the degree form allows less than (d+eps)|V| = {allowed:g}",
            {"vertex": worst, "loss": int(loss[worst])},
        )

    logger.info(
        f"Degree-form partition: {len(frozen)} clusters of size {m}, |V0|={len(v0)}, "
        f"{len(removed)} edges removed, {len(dropped_pairs)} pairs emptied"
    )
    return RegularPartition(g, v0, frozen, eps, d, pruned, certificates)


def singleton_partition(
    g: Graph,
    d: Optional[float] = None,
    eps: Optional[float] = None,
) -> RegularPartition:
    """Every vertex its own cluster; the reduced graph is then G itself."""
    return degree_form_prune(g, [[v] for v in g.vertices()], d, eps)


def _cross_degrees(pruned: Graph, vertices: Iterable[int], target: FrozenSet[int]) -> Dict[int, int]:
    adj = pruned.adjacency
    return {v: len(adj[v] & target) for v in vertices}


def super_regularize(
    part: RegularPartition,
    factor: "CliqueFactor",
    delta: Optional[float] = None,
) -> RegularPartition:
    """Move low-degree vertices of every clique into V0 and equalize cluster sizes.

    A vertex of V_i is low against a clique partner V_j when it has at most
    delta*|V_j| neighbours there. delta defaults to (d - eps)^(2k-2)/2; delta = 0
    disables the condition.
    """
    covered = sorted(v for clique in factor.cliques for v in clique)
    if covered != list(range(part.ell)):
        raise ArgumentError("the clique factor must cover every cluster; merge leftovers into V0 first")
    k = factor.k
    delta = default_delta(part.d, part.eps, k) if delta is None else delta
    m = part.m
    partners = factor.partner_map()
    alive = [set(c) for c in part.clusters]

    if delta > 0:
        first_pass = True
        while True:
            low = [set() for _ in alive]
            for i, own in enumerate(alive):
                for j in partners[i]:
                    target = frozenset(alive[j])
                    degrees = _cross_degrees(part.pruned_host, own, target)
                    against = {v for v, deg in degrees.items() if deg <= delta * len(target)}
                    if first_pass and len(against) > part.eps * m:
                        cert = part.certificate(i, j)
                        message = (
                            f"{len(against)} vertices of cluster {i} have low degree into cluster {j}, "
                            f"more than eps*m = {part.eps * m:g}"
                        )
                        if cert is not None and cert.certified:
                            raise InconsistencyError(message, {"pair": [i, j], "low": len(against)})
                        logger.warning(message)
                    low[i] |= against
            first_pass = False
            for i, bad in enumerate(low):
                alive[i] -= bad

            # equalize: clusters above the common size drop their weakest vertices
            target_size = min(len(c) for c in alive)
            if target_size == 0:
                raise InconsistencyError("super-regularization emptied a cluster")
            adj = part.pruned_host.adjacency
            trimmed = False
            for i, own in enumerate(alive):
                extra = len(own) - target_size
                if extra <= 0:
                    continue
                strength = {v: min((len(adj[v] & alive[j]) for j in partners[i]), default=0) for v in own}
                weakest = sorted(own, key=lambda v: (strength[v], v))[:extra]
                alive[i] -= set(weakest)
                trimmed = True
            if not any(low) and not trimmed:
                break

    discards = m - len(alive[0])
    if discards:
        eps_prime = part.eps * m / (m - discards)
        if eps_prime > 2 * part.eps:
            logger.warning(f"eps inflation {eps_prime:.4f} exceeds 2*eps, capped at {2 * part.eps:.4f}")
        eps_prime = min(eps_prime, 2 * part.eps)
    else:
        eps_prime = part.eps
    clusters = tuple(frozenset(c) for c in alive)
    v0 = part.V0 | frozenset(v for old, new in zip(part.clusters, clusters) for v in old - new)

    certificates = dict(part.certificates)
    for clique in factor.cliques:
        for a in clique:
            for b in clique:
                if a < b and (a, b) in certificates:
                    info = super_regularity(part.pruned_host, clusters[a], clusters[b], eps_prime, delta)
                    certificates[(a, b)] = certificates[(a, b)].with_super(info)

    logger.info(
        f"Super-regularization: {discards} vertices discarded per cluster, |V0|={len(v0)}, "
        f"eps'={eps_prime:.4f}, delta={delta:.3g}"
    )
    return replace(
        part,
        V0=v0,
        clusters=clusters,
        certificates=certificates,
        eps_prime=eps_prime,
        delta=delta,
        discarded=part.discarded + discards,
        size=len(clusters[0]),
    )


def restrict_to_clusters(part: RegularPartition, keep: Sequence[int]) -> RegularPartition:
    """Keep only the listed clusters (renumbered 0..len-1); the rest join V0."""
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 0 <= i < part.ell for i in keep):
        raise ArgumentError(f"invalid cluster selection {keep}")
    index = {old: new for new, old in enumerate(keep)}
    dropped = frozenset(v for i, c in enumerate(part.clusters) if i not in index for v in c)
    certificates = {}
    for (i, j), cert in part.certificates.items():
        if i in index and j in index:
            a, b = sorted((index[i], index[j]))
            certificates[(a, b)] = cert.relabel((a, b))
    return replace(
        part,
        V0=part.V0 | dropped,
        clusters=tuple(part.clusters[i] for i in keep),
        certificates=certificates,
    )


@dataclass(frozen=True)
class DegreeBoundCheck:
    """Minimum degree of G_r against (c - theta) l with c = delta(G)/n, theta = 2 eps + d."""

    c: float
    theta: float
    bound: float
    min_degree: int
    holds: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c": self.c,
            "theta": self.theta,
            "bound": self.bound,
            "min_degree": self.min_degree,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class ReducedGraph:
    base: RegularPartition
    graph: Graph
    edge_rule: str
    d: float
    degree_bound: DegreeBoundCheck

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ell": self.graph.n,
            "edges": sorted(list(e) for e in self.graph.edges),
            "edge_rule": self.edge_rule,
            "d": self.d,
            "degree_bound": self.degree_bound.to_dict(),
        }


def reduced_graph(
    part: RegularPartition,
    d: Optional[float] = None,
    edge_rule: str = "unrefuted",
    rng: RandomLike = None,
) -> ReducedGraph:
    """Cluster graph with an edge for every regular pair of density at least d in G'.

    ``edge_rule`` "certified" admits exactly certified pairs only; "unrefuted" also
    admits pairs that were searched or sampled without refutation. Missing
    certificates are computed on demand.
    """
    if edge_rule not in EDGE_RULES:
        raise ArgumentError(f"edge_rule must be one of {EDGE_RULES}, got {edge_rule!r}")
    d = part.d if d is None else d
    rng = np.random.default_rng(rng)
    ell = part.ell
    counts = _cluster_edge_counts(part.pruned_host, part.clusters)
    m = part.m

    edges = []
    for i in range(ell):
        for j in range(i + 1, ell):
            if m == 0 or counts[i, j] / (m * m) < d:
                continue
            cert = part.certificate(i, j)
            if cert is None:
                cert = certify_pair(
                    part.pruned_host, part.clusters[i], part.clusters[j], part.effective_eps, (i, j), rng
                )
            if cert.refuted or (edge_rule == "certified" and not cert.certified):
                continue
            edges.append((i, j))
    graph = Graph(ell, edges)

    n = part.host.n
    c = min_degree(part.host) / n if n else 0.0
    theta = 2 * part.eps + d
    bound = (c - theta) * ell
    observed = min_degree(graph) if ell else 0
    check = DegreeBoundCheck(c, theta, bound, observed, observed >= bound)
    if not check.holds:
        logger.warning(
            f"reduced graph minimum degree {observed} is below (c - theta) * l = {bound:.2f}"
        )
    return ReducedGraph(part, graph, edge_rule, d, check)
