"""Distributing the exceptional cluster V0 through the auxiliary bipartite graph F1."""
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import settings
from src.errors import BalanceError, HostRegimeError
from src.factor import CliqueFactor
from src.graph import Graph
from src.regularity import RegularPartition, default_delta

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuxBipartite:
    """F1: V0 on the left, clusters on the right.

    v - V_i is an edge when v has at least delta*m neighbours in every cluster of
    clq(V_i).
    """

    left: Tuple[int, ...]
    ell: int
    neighbors: Dict[int, Tuple[int, ...]]
    delta: float
    m: int

    @property
    def num_edges(self) -> int:
        return sum(len(c) for c in self.neighbors.values())

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def min_left_degree(self) -> Optional[int]:
        return min((len(c) for c in self.neighbors.values()), default=None)

    def isolated(self) -> List[int]:
        return [v for v in self.left if not self.neighbors[v]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "left": list(self.left),
            "ell": self.ell,
            "delta": self.delta,
            "m": self.m,
            "edges": {str(v): list(c) for v, c in self.neighbors.items()},
            "min_left_degree": self.min_left_degree,
        }


def cluster_degree_matrix(g: Graph, vertices: List[int], clusters) -> np.ndarray:
    """counts[r, i] = number of neighbours of vertices[r] in cluster i."""
    indicator = np.zeros((g.n, len(clusters)), dtype=np.int64)
    for i, c in enumerate(clusters):
        indicator[sorted(c), i] = 1
    rows = g.adjacency_matrix()[vertices].astype(np.int64)
    return rows @ indicator


def build_F1(
    g: Graph,
    part: RegularPartition,
    factor: CliqueFactor,
    delta: Optional[float] = None,
) -> AuxBipartite:
    if delta is None:
        delta = part.delta if part.delta is not None else default_delta(part.d, part.eps, factor.k)
    left = sorted(part.V0)
    m = part.m
    threshold = delta * m
    partners = factor.partner_map()
    neighbors: Dict[int, Tuple[int, ...]] = {}
    if left:
        counts = cluster_degree_matrix(g, left, part.clusters)
        for r, v in enumerate(left):
            neighbors[v] = tuple(
                i
                for i in range(part.ell)
                if all(counts[r, j] >= threshold for j in partners.get(i, []))
            )
    f1 = AuxBipartite(tuple(left), part.ell, neighbors, delta, m)
    logger.debug(f"F1: {len(left)} exceptional vertices, {f1.num_edges} edges, min degree {f1.min_left_degree}")
    return f1


def distribute_V0(
    g: Graph,
    part: RegularPartition,
    factor: CliqueFactor,
    f1: AuxBipartite,
    rng: np.random.Generator,
    retries: Optional[int] = None,
) -> RegularPartition:
    """Place every v in V0 into a uniformly random F1-neighbour cluster.

    The outcome must satisfy ||V_i| - |V_j|| < 4 k eps m; failed draws are retried with
    the continuing random stream up to ``retries`` times.
    """
    retries = settings.DISTRIBUTE_RETRIES if retries is None else retries
    if not part.V0:
        return part
    isolated = f1.isolated()
    if isolated:
        raise HostRegimeError(
            f"{len(isolated)} exceptional vertices have no neighbour cluster in F1, e.g. {isolated[:5]}",
            {"isolated": isolated},
        )

    left = list(f1.left)
    target = 4 * factor.k * part.eps * part.m
    base = np.array([len(c) for c in part.clusters], dtype=np.int64)
    for attempt in range(1, retries + 1):
        choice = [f1.neighbors[v][int(rng.integers(len(f1.neighbors[v])))] for v in left]
        sizes = base + np.bincount(choice, minlength=part.ell)
        spread = int(sizes.max() - sizes.min())
        if spread < target:
            clusters = [set(c) for c in part.clusters]
            for v, i in zip(left, choice):
                clusters[i].add(v)
            logger.info(f"V0 distributed: {len(left)} vertices, size spread {spread}, attempt {attempt}")
            return replace(
                part,
                V0=frozenset(),
                clusters=tuple(frozenset(c) for c in clusters),
                size=part.m,
            )
        logger.debug(f"V0 distribution attempt {attempt}: spread {spread} misses target {target:g}")
    raise BalanceError(
        f"no V0 distribution met ||V_i| - |V_j|| < {target:g} in {retries} attempts",
        {"target": target, "retries": retries},
    )
