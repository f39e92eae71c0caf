"""Immutable simple graphs and the elementary quantities built on them."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from config import settings
from src.errors import ArgumentError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


class Graph:
    """Immutable simple graph on the vertices ``0..n-1``.

    Derived graphs (pruned hosts, subgraphs) are new ``Graph`` values; nothing here is
    ever mutated after construction, so instances are safe to share between workers.
    """

    __slots__ = ("_n", "_edges", "_adj", "_matrix", "_nx")

    def __init__(self, n: int, edges: Iterable[Tuple[int, int]] = ()):
        if n < 0:
            raise ArgumentError(f"vertex count must be non-negative, got {n}")
        normalized = set()
        adj: List[set] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ArgumentError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise ArgumentError(f"self-loop at vertex {u}")
            normalized.add((u, v) if u < v else (v, u))
            adj[u].add(v)
            adj[v].add(u)
        self._n = n
        self._edges: FrozenSet[Edge] = frozenset(normalized)
        self._adj: Tuple[FrozenSet[int], ...] = tuple(frozenset(a) for a in adj)
        self._matrix: Optional[np.ndarray] = None
        self._nx: Optional[nx.Graph] = None

    # Construction helpers

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        """Build a graph from networkx, relabelling nodes to 0..n-1 in sorted order."""
        nodes = sorted(graph.nodes())
        index = {node: i for i, node in enumerate(nodes)}
        return cls(len(nodes), ((index[u], index[v]) for u, v in graph.edges()))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_networkx(nx.complete_graph(n))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_networkx(nx.path_graph(n))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_networkx(nx.cycle_graph(n))

    @classmethod
    def grid(cls, rows: int, cols: int) -> "Graph":
        """Grid graph with vertex ``r * cols + c`` at row r, column c."""
        return cls.from_networkx(nx.grid_2d_graph(rows, cols))

    # Basic accessors

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> FrozenSet[Edge]:
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        return self._adj

    def vertices(self) -> range:
        return range(self._n)

    def check_vertex(self, v: int) -> int:
        """Return ``v`` as an int, raising ArgumentError for an invalid id."""
        try:
            v = int(v)
        except (TypeError, ValueError):
            raise ArgumentError(f"invalid vertex id {v!r}")
        if not 0 <= v < self._n:
            raise ArgumentError(f"vertex {v} outside 0..{self._n - 1}")
        return v

    def neighbors(self, v: int) -> FrozenSet[int]:
        return self._adj[self.check_vertex(v)]

    def degree(self, v: int) -> int:
        return len(self._adj[self.check_vertex(v)])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self._adj), dtype=np.int64, count=self._n)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[self.check_vertex(u)]

    def adjacency_matrix(self) -> np.ndarray:
        """Read-only boolean adjacency matrix, built once per graph."""
        if self._matrix is None:
            matrix = np.zeros((self._n, self._n), dtype=bool)
            if self._edges:
                us, vs = zip(*self._edges)
                matrix[list(us), list(vs)] = True
                matrix[list(vs), list(us)] = True
            matrix.setflags(write=False)
            self._matrix = matrix
        return self._matrix

    def to_networkx(self) -> nx.Graph:
        """Frozen networkx view of this graph."""
        if self._nx is None:
            graph = nx.Graph()
            graph.add_nodes_from(range(self._n))
            graph.add_edges_from(self._edges)
            self._nx = nx.freeze(graph)
        return self._nx

    # Derived graphs

    def without_edges(self, removed: Iterable[Tuple[int, int]]) -> "Graph":
        drop = {(u, v) if u < v else (v, u) for u, v in removed}
        return Graph(self._n, (e for e in self._edges if e not in drop))

    def with_edges(self, added: Iterable[Tuple[int, int]]) -> "Graph":
        return Graph(self._n, list(self._edges) + list(added))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={len(self._edges)})"


@dataclass(frozen=True)
class VertexSet:
    """A set of vertex ids of a graph of order ``n``."""

    members: FrozenSet[int]
    n: int
    size: int = field(init=False)

    def __post_init__(self) -> None:
        members = frozenset(int(v) for v in self.members)
        bad = [v for v in members if not 0 <= v < self.n]
        if bad:
            raise ArgumentError(f"vertices {sorted(bad)[:5]} outside 0..{self.n - 1}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "size", len(members))

    @classmethod
    def of(cls, g: Graph, vertices: Iterable[int]) -> "VertexSet":
        return cls(frozenset(vertices), g.n)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def __contains__(self, v: object) -> bool:
        return v in self.members

    def to_list(self) -> List[int]:
        return sorted(self.members)


VertexSetLike = Union[VertexSet, Iterable[int]]


def members_of(g: Graph, vertices: VertexSetLike) -> FrozenSet[int]:
    """Validate ``vertices`` against ``g`` and return them as a frozenset."""
    if isinstance(vertices, VertexSet):
        if vertices.n != g.n:
            raise ArgumentError(f"vertex set belongs to a graph of order {vertices.n}, not {g.n}")
        return vertices.members
    return VertexSet.of(g, vertices).members


def degree_into(g: Graph, v: int, A: VertexSetLike) -> int:
    """Number of neighbours of ``v`` in ``A``."""
    return len(g.neighbors(v) & members_of(g, A))


def edges_between(g: Graph, X: VertexSetLike, Y: VertexSetLike) -> int:
    """e(X, Y): edges with one endpoint in X and the other in Y."""
    xs, ys = members_of(g, X), members_of(g, Y)
    adj = g.adjacency
    return sum(len(adj[x] & ys) for x in xs)


def density(g: Graph, X: VertexSetLike, Y: VertexSetLike) -> float:
    """d(X, Y) = e(X, Y) / (|X| |Y|) for disjoint non-empty X and Y."""
    xs, ys = members_of(g, X), members_of(g, Y)
    if not xs or not ys:
        raise ArgumentError("density needs two non-empty sets")
    if xs & ys:
        raise ArgumentError(f"density needs disjoint sets; shared vertices {sorted(xs & ys)[:5]}")
    return edges_between(g, xs, ys) / (len(xs) * len(ys))


def components(g: Graph, removed: VertexSetLike = ()) -> List[VertexSet]:
    """Connected components of ``g - removed``, ordered by smallest vertex."""
    gone = members_of(g, removed)
    keep = [v for v in g.vertices() if v not in gone]
    view = g.to_networkx().subgraph(keep)
    parts = [VertexSet(frozenset(c), g.n) for c in nx.connected_components(view)]
    parts.sort(key=lambda c: min(c.members))
    return parts


def min_degree(g: Graph) -> int:
    if g.n == 0:
        raise ArgumentError("minimum degree of the empty graph is undefined")
    return int(g.degrees().min())


def max_degree(g: Graph) -> int:
    if g.n == 0:
        raise ArgumentError("maximum degree of the empty graph is undefined")
    return int(g.degrees().max())


@dataclass(frozen=True)
class Coloring:
    """A proper vertex coloring with colors ``0..k-1``."""

    colors: Tuple[int, ...]
    k: int
    exact: bool = False

    def classes(self, k: Optional[int] = None) -> List[FrozenSet[int]]:
        """Color classes, padded with empty classes up to ``k``."""
        count = max(self.k, k or 0)
        buckets: List[set] = [set() for _ in range(count)]
        for v, c in enumerate(self.colors):
            buckets[c].add(v)
        return [frozenset(b) for b in buckets]

    def is_proper(self, g: Graph) -> bool:
        return all(self.colors[u] != self.colors[v] for u, v in g.edges)


def _k_coloring(g: Graph, k: int) -> Optional[List[int]]:
    """Backtracking search for a proper k-coloring, DSATUR vertex selection."""
    n = g.n
    adj = g.adjacency
    colors = [-1] * n

    def pick() -> int:
        best, best_key = -1, (-1, -1)
        for v in range(n):
            if colors[v] >= 0:
                continue
            saturation = len({colors[u] for u in adj[v] if colors[u] >= 0})
            key = (saturation, len(adj[v]))
            if key > best_key:
                best, best_key = v, key
        return best

    def solve(colored: int, used: int) -> bool:
        if colored == n:
            return True
        v = pick()
        forbidden = {colors[u] for u in adj[v]}
        # colors above ``used`` are interchangeable, so only the first new one is tried
        for c in range(min(k, used + 1)):
            if c in forbidden:
                continue
            colors[v] = c
            if solve(colored + 1, max(used, c + 1)):
                return True
            colors[v] = -1
        return False

    return colors if solve(0, 0) else None


def chromatic_upper(g: Graph, exact_cap: Optional[int] = None) -> Coloring:
    """DSATUR coloring of ``g``; exact chromatic number when ``g.n <= exact_cap``."""
    cap = settings.EXACT_CHROMATIC_CAP if exact_cap is None else exact_cap
    if g.n == 0:
        return Coloring((), 0, exact=True)
    greedy: Dict[int, int] = nx.coloring.greedy_color(
        g.to_networkx(), strategy="saturation_largest_first"
    )
    colors = [greedy[v] for v in g.vertices()]
    k = max(colors) + 1
    if g.n > cap:
        return Coloring(tuple(colors), k, exact=False)

    lower = 2 if g.num_edges else 1
    for target in range(lower, k):
        found = _k_coloring(g, target)
        if found is not None:
            logger.debug(f"exact search improved DSATUR from {k} to {target} colors")
            return Coloring(tuple(found), target, exact=True)
    return Coloring(tuple(colors), k, exact=True)
