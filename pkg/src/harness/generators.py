"""Instance generators: planted dense hosts, separable pattern families, negative hosts."""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Set, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings
from src.errors import ArgumentError, GenerationError
from src.factor import CliqueFactor
from src.graph import Graph, components, max_degree, min_degree
from src.regularity import PairCertificate, PairStatus, RegularPartition, certify_pair
from src.separability import (
    BandwidthOrdering,
    Separation,
    bandwidth_separator,
    verify_separation,
)

logger = logging.getLogger(__name__)

# share of the degree-form loss budget (d + eps) n that intra-cluster edges may use
INTRA_BUDGET = 0.4
INTRA_CAP = 0.9


class HostSpec(BaseModel):
    """Planted blow-up of a reduced pattern on ``ell`` clusters of size ``m``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ell: int = Field(ge=1)
    m: int = Field(ge=1)
    k: int = Field(default=3, ge=2)
    eps: float = Field(default_factory=lambda: settings.EPS, gt=0, lt=1)
    d: float = Field(default_factory=lambda: settings.D, gt=0, lt=1)
    gamma: float = Field(default_factory=lambda: settings.GAMMA, gt=0, lt=1)
    pattern: Literal["complete", "random"] = "complete"
    pattern_density: float = Field(default=0.8, gt=0, le=1)
    d_pair: float = Field(default_factory=lambda: settings.D_PAIR, gt=0, le=1)
    v0_fraction: float = Field(default_factory=lambda: settings.PLANTED_V0_FRACTION, ge=0, lt=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _enough_clusters(self) -> "HostSpec":
        if self.ell < self.k:
            raise ValueError(f"ell ({self.ell}) must be at least k ({self.k}) to plant a clique")
        return self

    def min_degree_fraction(self) -> float:
        return 1 - 1 / (2 * (self.k - 1)) + self.gamma


@dataclass
class PlantedHost:
    graph: Graph
    partition: RegularPartition
    factor: CliqueFactor
    pattern: Graph
    pair_density: float
    intra_density: float
    repairs: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.graph.n,
            "edges": self.graph.num_edges,
            "pattern_edges": sorted(list(e) for e in self.pattern.edges),
            "factor": self.factor.to_dict(),
            "pair_density": self.pair_density,
            "intra_density": self.intra_density,
            "repairs": self.repairs,
            "min_degree": min_degree(self.graph) if self.graph.n else 0,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], graph: Graph) -> "PlantedHost":
        """Rebuild from a gen-host sidecar ({"planted": ..., "partition": ...}) over ``graph``."""
        planted = data.get("planted", {})
        if "partition" not in data or "factor" not in planted:
            raise ArgumentError("sidecar lacks the planted partition or factor")
        partition = RegularPartition.from_dict(data["partition"], graph)
        return cls(
            graph=graph,
            partition=partition,
            factor=CliqueFactor.from_dict(planted["factor"]),
            pattern=Graph(partition.ell, [tuple(e) for e in planted.get("pattern_edges", [])]),
            pair_density=float(planted.get("pair_density", 0.0)),
            intra_density=float(planted.get("intra_density", 0.0)),
            repairs=int(planted.get("repairs", 0)),
        )


def _planted_factor(ell: int, k: int) -> CliqueFactor:
    cliques = [list(range(s, s + k)) for s in range(0, ell - k + 1, k)]
    covered = len(cliques) * k
    return CliqueFactor.build(cliques, list(range(covered, ell)), k)


def _pattern(spec: HostSpec, factor: CliqueFactor, rng: np.random.Generator) -> Graph:
    if spec.pattern == "complete":
        return Graph.complete(spec.ell)
    ell = spec.ell
    edges: Set[Tuple[int, int]] = set()
    for clique in factor.cliques:
        edges.update((a, b) for a in clique for b in clique if a < b)
    for a in range(ell):
        for b in range(a + 1, ell):
            if rng.random() < spec.pattern_density:
                edges.add((a, b))
    # keep the pattern above the clique-factor degree threshold
    need = math.ceil((1 - 1 / spec.k) * ell)
    adj = [set() for _ in range(ell)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for a in range(ell):
        while len(adj[a]) < need:
            options = [b for b in range(ell) if b != a and b not in adj[a]]
            b = options[int(rng.integers(len(options)))]
            adj[a].add(b)
            adj[b].add(a)
            edges.add((min(a, b), max(a, b)))
    return Graph(ell, edges)


def generate_host(spec: HostSpec, rng: Optional[np.random.Generator] = None) -> PlantedHost:
    """Random blow-up of a reduced pattern with a planted clique factor and a small V0.

    Pattern pairs become random bipartite graphs of density at least ``d_pair``; the
    density (and, when the pattern alone cannot carry the degree target, a bounded
    intra-cluster density) is raised until the expected minimum degree clears
    (1 - 1/(2(k-1)) + gamma) n. Vertices still short after sampling get extra
    pattern-compatible edges; the final minimum degree is re-checked by a scan.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    ell, m = spec.ell, spec.m
    core = ell * m
    v0_size = math.floor(spec.v0_fraction * core)
    n = core + v0_size
    target = math.ceil(spec.min_degree_fraction() * n - 1e-9)

    factor = _planted_factor(ell, spec.k)
    pattern = _pattern(spec, factor, rng)
    weakest = int(pattern.degrees().min()) if ell > 1 else 0

    intra_limit = INTRA_CAP * (spec.d + spec.eps) * n
    q_max = min(1.0, INTRA_BUDGET * (spec.d + spec.eps) * n / (m - 1)) if m > 1 else 0.0
    cross = weakest * m + v0_size
    best_case = cross + q_max * (m - 1)
    if best_case < target:
        raise GenerationError(
            f"cluster vertices can reach at most {best_case:.1f} neighbours, "
            f"the degree target is {target} on {n} vertices",
            {"target": target, "best_case": best_case},
        )
    want = min(target + 2 * math.sqrt(target), best_case)
    p = spec.d_pair
    q = 0.0
    if p * cross < want:
        p = min(1.0, want / cross) if cross else 1.0
    if p * cross < want and m > 1:
        q = min(q_max, (want - cross) / (m - 1))

    clusters = [list(range(i * m, (i + 1) * m)) for i in range(ell)]
    v0 = list(range(core, n))
    matrix = np.zeros((n, n), dtype=bool)
    for a, b in pattern.edges:
        block = rng.random((m, m)) < p
        matrix[a * m:(a + 1) * m, b * m:(b + 1) * m] = block
    if q > 0:
        for i in range(ell):
            block = np.triu(rng.random((m, m)) < q, 1)
            matrix[i * m:(i + 1) * m, i * m:(i + 1) * m] |= block
    if v0_size:
        p0 = min(1.0, max(p, (target + 2 * math.sqrt(target)) / max(n - 1, 1)))
        matrix[:, core:] |= rng.random((n, v0_size)) < p0
    # only the upper triangle is sampled; mirror it
    matrix = np.triu(matrix, 1)
    matrix = matrix | matrix.T

    repairs = _repair_degrees(matrix, pattern, m, core, target, intra_limit, rng)
    us, vs = np.nonzero(np.triu(matrix, 1))
    graph = Graph(n, zip(us.tolist(), vs.tolist()))
    if n and min_degree(graph) < target:
        raise GenerationError(f"generated host has minimum degree {min_degree(graph)} < {target}")

    cluster_sets = tuple(frozenset(c) for c in clusters)
    intra = [
        (u, v) for u, v in graph.edges if u < core and v < core and u // m == v // m
    ]
    pruned = graph.without_edges(intra)
    partition = RegularPartition(
        host=graph,
        V0=frozenset(v0),
        clusters=cluster_sets,
        eps=spec.eps,
        d=spec.d,
        pruned_host=pruned,
        certificates=_planted_certificates(pruned, cluster_sets, pattern, spec.eps, rng),
    )
    logger.info(
        f"Planted host: n={n}, ell={ell}, m={m}, |V0|={v0_size}, pair density {p:.3f}, "
        f"intra density {q:.3f}, {repairs} repair edges, min degree {min_degree(graph) if n else 0} >= {target}"
    )
    return PlantedHost(graph, partition, factor, pattern, p, q, repairs)


def _planted_certificates(
    pruned: Graph,
    clusters: Tuple[frozenset, ...],
    pattern: Graph,
    eps: float,
    rng: np.random.Generator,
) -> Dict[Tuple[int, int], PairCertificate]:
    """Certificates for the pattern pairs (exact when small, else sampled); the other pairs are empty."""
    planted = {(min(a, b), max(a, b)) for a, b in pattern.edges}
    certificates: Dict[Tuple[int, int], PairCertificate] = {}
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            if (i, j) in planted:
                cert = certify_pair(pruned, clusters[i], clusters[j], eps, (i, j), rng, method="sampled")
                if cert.refuted:
                    logger.warning(f"planted pair {(i, j)} was refuted, gap {cert.witness.gap:.3f}")
            else:
                cert = PairCertificate((i, j), 0.0, PairStatus.CERTIFIED, eps, "emptied")
            certificates[(i, j)] = cert
    return certificates


def _repair_degrees(
    matrix: np.ndarray,
    pattern: Graph,
    m: int,
    core: int,
    target: int,
    intra_limit: float,
    rng: np.random.Generator,
) -> int:
    """Add pattern-compatible edges at vertices below ``target``; returns how many."""
    n = matrix.shape[0]
    cluster = np.array([v // m if v < core else -1 for v in range(n)])
    allowed = np.ones((n, n), dtype=bool)
    if core:
        pattern_matrix = pattern.adjacency_matrix()
        inner = cluster >= 0
        allowed[np.ix_(inner, inner)] = pattern_matrix[np.ix_(cluster[inner], cluster[inner])]
        same = (cluster[:, None] == cluster[None, :]) & inner[:, None]
        allowed |= same
    np.fill_diagonal(allowed, False)
    same_cluster = (cluster[:, None] == cluster[None, :]) & (cluster[:, None] >= 0)

    added = 0
    for v in np.argsort(matrix.sum(axis=1), kind="stable"):
        v = int(v)
        deficit = target - int(matrix[v].sum())
        if deficit <= 0:
            continue
        options = np.flatnonzero(allowed[v] & ~matrix[v])
        # cross-cluster partners first, intra-cluster ones only within the loss budget
        cross = [u for u in options if not same_cluster[v, u]]
        intra = [u for u in options if same_cluster[v, u]]
        rng.shuffle(cross)
        rng.shuffle(intra)
        intra_room = max(0, int(intra_limit) - int(matrix[v][same_cluster[v]].sum()))
        picks = list(cross[:deficit])
        if len(picks) < deficit:
            picks += intra[: min(deficit - len(picks), intra_room)]
        for u in picks:
            matrix[v, u] = matrix[u, v] = True
        added += len(picks)
    return added


def complete_multipartite(*sizes: int) -> Graph:
    """K_{s1, s2, ...} with parts laid out consecutively."""
    return Graph.from_networkx(nx.complete_multipartite_graph(*sizes))


class SubgraphSpec(BaseModel):
    """A bounded-degree, separable pattern graph H."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["grid", "forest", "component-union", "bandwidth-path-power", "matchings-union"]
    n: int = Field(default=100, ge=1)
    max_degree: int = Field(default=4, ge=0)
    rows: Optional[int] = Field(default=None, ge=1)
    cols: Optional[int] = Field(default=None, ge=1)
    component: Literal["path", "cycle", "clique"] = "path"
    component_size: int = Field(default=3, ge=1)
    separator_size: int = Field(default=0, ge=0)
    bandwidth: int = Field(default=1, ge=1)
    beta: Optional[float] = Field(default=None, gt=0, le=1)
    alpha: float = Field(default_factory=lambda: settings.ALPHA, gt=0, le=1)
    tree_break: float = Field(default=0.05, ge=0, le=1)
    matchings: int = Field(default=5, ge=1)
    seed: Optional[int] = None


@dataclass
class GeneratedSubgraph:
    graph: Graph
    family: str
    separation: Optional[Separation] = None
    ordering: Optional[BandwidthOrdering] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "n": self.graph.n,
            "edges": self.graph.num_edges,
            "max_degree": max_degree(self.graph) if self.graph.n else 0,
            "separation": self.separation.to_dict() if self.separation else None,
            "ordering": list(self.ordering.order) if self.ordering else None,
        }


def _grid(spec: SubgraphSpec) -> GeneratedSubgraph:
    """rows x cols grid; without explicit dimensions, the first n vertices of a near-square
    grid in row-major order (only the last row is partial)."""
    if spec.rows and spec.cols:
        rows, cols = spec.rows, spec.cols
        n = rows * cols
    else:
        n = spec.n
        rows = spec.rows or max(1, math.isqrt(n))
        cols = spec.cols or math.ceil(n / rows)
        rows = math.ceil(n / cols)
    full = Graph.grid(rows, cols)
    h = Graph(n, ((u, v) for u, v in full.edges if u < n and v < n))
    if rows < 2:
        return GeneratedSubgraph(h, "grid", Separation.build((), (c.members for c in components(h)), n))
    middle = rows // 2
    S = [v for v in range(middle * cols, (middle + 1) * cols) if v < n]
    top = range(middle * cols)
    bottom = range((middle + 1) * cols, n)
    return GeneratedSubgraph(h, "grid", Separation.build(S, [top, bottom], n, "middle row"))


def _centroid(view: nx.Graph) -> int:
    """Vertex whose removal leaves the smallest largest component."""
    best, best_size = None, None
    for v in sorted(view.nodes()):
        rest = view.subgraph(u for u in view.nodes() if u != v)
        largest = max((len(c) for c in nx.connected_components(rest)), default=0)
        if best_size is None or largest < best_size:
            best, best_size = v, largest
    return best


def _forest(spec: SubgraphSpec, rng: np.random.Generator) -> GeneratedSubgraph:
    n, cap = spec.n, max(spec.max_degree, 1)
    edges = []
    degree = [0] * n
    for v in range(1, n):
        if rng.random() < spec.tree_break:
            continue
        options = [u for u in range(v) if degree[u] < cap]
        if not options:
            continue
        u = options[int(rng.integers(len(options)))]
        edges.append((u, v))
        degree[u] += 1
        degree[v] += 1
    h = Graph(n, edges)

    bound = max(1, math.floor(spec.alpha * n))
    S: Set[int] = set()
    while True:
        big = [c for c in components(h, S) if len(c) > bound]
        if not big:
            break
        largest = max(big, key=len)
        S.add(_centroid(h.to_networkx().subgraph(largest.members)))
    parts = (c.members for c in components(h, S))
    return GeneratedSubgraph(h, "forest", Separation.build(S, parts, n, "centroids"))


def _component_union(spec: SubgraphSpec, rng: np.random.Generator) -> GeneratedSubgraph:
    size = spec.component_size
    body = spec.n - spec.separator_size
    if body < 1:
        raise GenerationError("separator_size leaves no room for components")
    edges: List[Tuple[int, int]] = []
    heads = []
    for start in range(0, body, size):
        members = list(range(start, min(start + size, body)))
        heads.append(members[0])
        if spec.component == "path" or len(members) < 3:
            edges.extend(zip(members, members[1:]))
        elif spec.component == "cycle":
            edges.extend(zip(members, members[1:] + members[:1]))
        else:
            edges.extend((a, b) for i, a in enumerate(members) for b in members[i + 1:])
    degree = [0] * spec.n
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    S = list(range(body, spec.n))
    for s in S:
        # each separator vertex is joined to the first vertex of a few random components
        order = rng.permutation(len(heads))
        for index in order[: max(spec.max_degree - 1, 1)]:
            head = heads[int(index)]
            if degree[head] < spec.max_degree and degree[s] < spec.max_degree:
                edges.append((head, s))
                degree[head] += 1
                degree[s] += 1
    h = Graph(spec.n, edges)
    parts = (c.members for c in components(h, S))
    return GeneratedSubgraph(h, "component-union", Separation.build(S, parts, spec.n, "explicit"))


def _path_power(spec: SubgraphSpec) -> GeneratedSubgraph:
    n, b = spec.n, spec.bandwidth
    edges = [(i, i + j) for i in range(n) for j in range(1, b + 1) if i + j < n]
    h = Graph(n, edges)
    ordering = BandwidthOrdering.from_order(h, range(n))
    beta = spec.beta if spec.beta is not None else max(b / n, 1e-9)
    if b > beta * n + 1e-9:
        raise GenerationError(f"bandwidth {b} exceeds beta*n = {beta * n:g}")
    return GeneratedSubgraph(h, "bandwidth-path-power", bandwidth_separator(h, ordering, beta), ordering)


def _matchings_union(spec: SubgraphSpec, rng: np.random.Generator) -> GeneratedSubgraph:
    """Exactly d-regular bipartite graph on s + s vertices: d successive random perfect
    matchings, each drawn from the complement of the previous ones."""
    if spec.n % 2:
        raise GenerationError(f"matchings-union needs an even number of vertices, got {spec.n}")
    side = spec.n // 2
    if spec.matchings > side:
        raise GenerationError(f"{spec.matchings} disjoint perfect matchings need at least that many vertices per side")
    present: Set[Tuple[int, int]] = set()
    for _ in range(spec.matchings):
        bipartite = nx.Graph()
        left = [("l", int(i)) for i in rng.permutation(side)]
        bipartite.add_nodes_from(left, bipartite=0)
        right_order = [int(j) for j in rng.permutation(side)]
        bipartite.add_nodes_from((("r", j) for j in right_order), bipartite=1)
        for _, i in left:
            for j in right_order:
                if (i, j) not in present:
                    bipartite.add_edge(("l", i), ("r", j))
        matching = nx.bipartite.hopcroft_karp_matching(bipartite, top_nodes=left)
        if any(node not in matching for node in left):
            raise GenerationError("no perfect matching left in the bipartite complement")
        present.update((i, matching[("l", i)][1]) for _, i in left)
    h = Graph(2 * side, ((i, side + j) for i, j in present))
    return GeneratedSubgraph(h, "matchings-union")


def _promised_alpha(spec: SubgraphSpec, n: int, sep: Separation) -> float:
    """Separability each family's witness promises: half for the middle-row grid cut
    (a single row is its own part), sqrt(beta) plus interval rounding for path powers,
    ``spec.alpha`` otherwise."""
    if spec.family == "grid":
        return 0.5 if sep.S else 1.0
    if spec.family == "bandwidth-path-power":
        beta = spec.beta if spec.beta is not None else max(spec.bandwidth / n, 1e-9)
        return min(1.0, math.sqrt(beta) + 2 * math.ceil(beta * n) / n)
    return spec.alpha


def generate_H(spec: SubgraphSpec, rng: Optional[np.random.Generator] = None) -> GeneratedSubgraph:
    """Build a pattern graph of the requested family with its separability witness.

    The degree cap and the witness (at the family's promised alpha) are re-checked
    before returning.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    if spec.family == "grid":
        result = _grid(spec)
    elif spec.family == "forest":
        result = _forest(spec, rng)
    elif spec.family == "component-union":
        result = _component_union(spec, rng)
    elif spec.family == "bandwidth-path-power":
        result = _path_power(spec)
    else:
        result = _matchings_union(spec, rng)

    h = result.graph
    observed = max_degree(h) if h.n else 0
    if observed > spec.max_degree:
        raise GenerationError(
            f"{spec.family}: maximum degree {observed} exceeds max_degree = {spec.max_degree}",
            {"observed": observed, "max_degree": spec.max_degree},
        )
    if result.separation is not None:
        alpha = _promised_alpha(spec, h.n, result.separation)
        verdict = verify_separation(h, result.separation, alpha)
        if not verdict:
            raise GenerationError(f"{spec.family}: witness fails at alpha = {alpha:.3f}: {verdict.violation}")
    logger.debug(f"Generated {spec.family} pattern: {h!r}, max degree {observed}")
    return result
