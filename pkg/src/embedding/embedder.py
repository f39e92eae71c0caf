"""Clique-by-clique embedding of H into the balanced cluster structure, and its checker."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from config import settings
from src.assignment import AssignmentMap
from src.errors import ArgumentError, EmbeddingFailedError, InconsistencyError
from src.factor import CliqueFactor
from src.graph import Graph
from src.regularity import RegularPartition

from .restrictions import RestrictionSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Embedding:
    """phi[x] is the host vertex of H-vertex x."""

    phi: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.phi)

    def to_list(self) -> List[int]:
        return list(self.phi)

    def to_dict(self) -> Dict[str, Any]:
        return {"phi": list(self.phi)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Embedding":
        return cls(tuple(int(v) for v in data["phi"]))


@dataclass(frozen=True)
class EmbeddingVerdict:
    ok: bool
    violation: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "violation": self.violation}


def verify_embedding(h: Graph, g: Graph, phi: Sequence[int]) -> EmbeddingVerdict:
    """Independent check: phi is injective and maps every H-edge onto a G-edge."""
    if isinstance(phi, Embedding):
        phi = phi.phi
    if len(phi) != h.n:
        return EmbeddingVerdict(False, f"map has {len(phi)} entries, H has {h.n} vertices")
    owner: Dict[int, int] = {}
    for x, v in enumerate(phi):
        if not 0 <= v < g.n:
            return EmbeddingVerdict(False, f"H-vertex {x} is sent to {v}, outside the host")
        if v in owner:
            return EmbeddingVerdict(False, f"not injective: H-vertices {owner[v]} and {x} both map to {v}")
        owner[v] = x
    for x, y in sorted(h.edges):
        if not g.has_edge(phi[x], phi[y]):
            return EmbeddingVerdict(False, f"H-edge ({x}, {y}) maps onto the non-edge ({phi[x]}, {phi[y]})")
    return EmbeddingVerdict(True)


class _CliqueRun:
    """One attempt at embedding the H-vertices of a single clique."""

    def __init__(
        self,
        h: Graph,
        g: Graph,
        clusters: Sequence[FrozenSet[int]],
        members: Dict[int, List[int]],
        restrictions: Dict[int, RestrictionSet],
        phi: Dict[int, int],
        used: Set[int],
        rng: np.random.Generator,
        rho: float,
    ):
        self.h, self.g = h, g
        self.clusters = clusters
        self.members = members
        self.restrictions = restrictions
        self.phi = phi
        self.used = used
        self.rng = rng
        self.rho = rho
        self.placed: List[int] = []

    def compatible(self, x: int, cluster: int) -> Set[int]:
        """Unused host vertices of ``cluster`` adjacent to the images of x's embedded neighbours."""
        options = set(self.clusters[cluster]) - self.used
        if x in self.restrictions:
            options &= self.restrictions[x].allowed
        gadj = self.g.adjacency
        for y in self.h.neighbors(x):
            if y in self.phi:
                options &= gadj[self.phi[y]]
        return options

    def place(self, x: int, v: int) -> None:
        self.phi[x] = v
        self.used.add(v)
        self.placed.append(x)

    def undo(self) -> None:
        for x in self.placed:
            self.used.discard(self.phi.pop(x))
        self.placed = []

    def greedy(self) -> Dict[int, List[int]]:
        """Place up to (1 - rho) of every cluster most-constrained-first; return the tail."""
        hadj = self.h.adjacency
        quota = {c: int((1 - self.rho) * len(self.clusters[c])) for c in self.members}
        tail: Dict[int, List[int]] = {c: [] for c in self.members}
        pending = set()
        for c, xs in self.members.items():
            for x in xs:
                # isolated vertices carry no constraint and go straight to the matching phase
                if hadj[x]:
                    pending.add(x)
                else:
                    tail[c].append(x)
        cluster_of = {x: c for c, xs in self.members.items() for x in xs}
        embedded_neighbors = {x: sum(1 for y in hadj[x] if y in self.phi) for x in pending}

        while pending:
            x = max(pending, key=lambda z: (embedded_neighbors[z], len(hadj[z]), -z))
            pending.discard(x)
            c = cluster_of[x]
            if quota[c] <= 0:
                tail[c].append(x)
                continue
            options = self.compatible(x, c)
            if not options:
                tail[c].append(x)
                continue
            choice = sorted(options)[int(self.rng.integers(len(options)))]
            self.place(x, choice)
            quota[c] -= 1
            for y in hadj[x]:
                if y in pending:
                    embedded_neighbors[y] += 1
        return tail

    def match(self, cluster: int, xs: List[int]) -> Optional[FrozenSet[int]]:
        """Perfect matching of ``xs`` into the unused vertices of ``cluster``.

        Returns None on success, else a Hall-violating set of H-vertices.
        """
        if not xs:
            return None
        bipartite = nx.Graph()
        top = [("h", x) for x in xs]
        bipartite.add_nodes_from(top, bipartite=0)
        free = set(self.clusters[cluster]) - self.used
        bipartite.add_nodes_from((("g", v) for v in free), bipartite=1)
        for x in xs:
            bipartite.add_edges_from((("h", x), ("g", v)) for v in self.compatible(x, cluster))
        matching = nx.bipartite.hopcroft_karp_matching(bipartite, top_nodes=top)
        if all(node in matching for node in top):
            for x in xs:
                self.place(x, matching[("h", x)][1])
            return None
        cover = nx.bipartite.to_vertex_cover(bipartite, matching, top_nodes=top)
        return frozenset(x for kind, x in top if (kind, x) not in cover)


def embed_cliquewise(
    h: Graph,
    g: Graph,
    kappa: AssignmentMap,
    part: RegularPartition,
    factor: CliqueFactor,
    restrictions: Dict[int, RestrictionSet],
    rng: np.random.Generator,
    rho: Optional[float] = None,
    retries: Optional[int] = None,
) -> Embedding:
    """Embed H clique by clique: randomized greedy for most of each cluster, then a
    perfect matching per cluster for the remaining fraction ``rho``.

    Cliques carrying the most restricted vertices go first. A clique whose matching
    phase fails is reshuffled up to ``retries`` times before EmbeddingFailedError.
    """
    rho = settings.RHO if rho is None else rho
    retries = settings.EMBED_RETRIES if retries is None else retries
    if not kappa.complete:
        raise ArgumentError("every H-vertex must be assigned to a cluster before embedding")
    loads = kappa.loads()
    sizes = [len(c) for c in part.clusters]
    mismatched = [i for i in range(part.ell) if sizes[i] != loads[i]]
    if mismatched:
        i = mismatched[0]
        raise ArgumentError(f"cluster {i} has {sizes[i]} host vertices but {loads[i]} H-vertices")

    restricted_in = [sum(1 for x in restrictions if int(kappa.kappa[x]) in clique) for clique in factor.cliques]
    order = sorted(range(len(factor.cliques)), key=lambda q: (-restricted_in[q], q))

    phi: Dict[int, int] = {}
    used: Set[int] = set()
    for q in order:
        members = {c: kappa.assigned_to(c) for c in factor.cliques[q]}
        hall: FrozenSet[int] = frozenset()
        for attempt in range(retries + 1):
            run = _CliqueRun(h, g, part.clusters, members, restrictions, phi, used, rng, rho)
            tail = run.greedy()
            hall = frozenset()
            for c in factor.cliques[q]:
                hall = run.match(c, tail[c]) or frozenset()
                if hall:
                    break
            if not hall:
                break
            logger.debug(f"clique {q}: matching failed on attempt {attempt + 1}, Hall set of size {len(hall)}")
            run.undo()
        else:
            raise EmbeddingFailedError(
                f"clique {q}: no perfect matching after {retries} reshuffles", q, hall
            )

    embedding = Embedding(tuple(phi[x] for x in range(h.n)))
    verdict = verify_embedding(h, g, embedding.phi)
    if not verdict:
        raise InconsistencyError(f"embedder produced an invalid map: {verdict.violation}")
    logger.info(f"Embedded H ({h.n} vertices) clique by clique into {len(factor.cliques)} cliques")
    return embedding


def respects_assignment(phi: Sequence[int], kappa: AssignmentMap, part: RegularPartition) -> bool:
    """cluster(phi(x)) = kappa(x) for every x."""
    cluster_of = part.cluster_of
    return all(cluster_of.get(v) == int(kappa.kappa[x]) for x, v in enumerate(phi))
