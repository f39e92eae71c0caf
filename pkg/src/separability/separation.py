"""Separators, alpha-separability certificates and the bandwidth-interval decomposition."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from config import settings
from src.errors import ArgumentError, PreconditionError, StructuralError
from src.graph import Graph, components

logger = logging.getLogger(__name__)

_TOL = 1e-9


@dataclass(frozen=True)
class Separation:
    """Separator ``S`` of a graph on ``n`` vertices and the parts of ``H - S``.

    A listed part may be a union of several connected components (the bandwidth
    construction produces such blocks); what matters is that no edge joins two parts.
    """

    S: FrozenSet[int]
    components: Tuple[FrozenSet[int], ...]
    n: int
    note: Optional[str] = None

    @classmethod
    def build(
        cls,
        S: Iterable[int],
        parts: Iterable[Iterable[int]],
        n: int,
        note: Optional[str] = None,
    ) -> "Separation":
        frozen = tuple(frozenset(p) for p in parts)
        frozen = tuple(sorted((p for p in frozen if p), key=min))
        return cls(frozenset(S), frozen, n, note)

    @property
    def alpha_certificate(self) -> float:
        """max(|S|, largest part) / n."""
        if self.n == 0:
            return 0.0
        largest = max((len(c) for c in self.components), default=0)
        return max(len(self.S), largest) / self.n

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        data: Dict[str, Any] = {
            "S": sorted(self.S),
            "components": [sorted(c) for c in self.components],
            "n": self.n,
            "alpha_certificate": self.alpha_certificate,
        }
        if self.note:
            data["note"] = self.note
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], n: Optional[int] = None) -> "Separation":
        size = n if n is not None else data.get("n")
        if size is None:
            raise ArgumentError("separation JSON carries no vertex count 'n'")
        return cls.build(data["S"], data["components"], int(size), data.get("note"))


@dataclass(frozen=True)
class SeparationVerdict:
    """Outcome of :func:`verify_separation`; truthy iff the separation is accepted."""

    ok: bool
    alpha: float
    certificate: float
    violation: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "alpha": self.alpha,
            "certificate": self.certificate,
            "violation": self.violation,
        }


def check_structure(h: Graph, sep: Separation) -> None:
    """Raise StructuralError unless S and the parts partition V(H)."""
    if sep.n != h.n:
        raise StructuralError(f"separation is for {sep.n} vertices, graph has {h.n}")
    seen = set()
    for label, part in [("S", sep.S)] + [(f"component {i}", c) for i, c in enumerate(sep.components)]:
        bad = [v for v in part if not 0 <= v < h.n]
        if bad:
            raise StructuralError(f"{label} lists vertices outside the graph: {sorted(bad)[:5]}")
        overlap = seen & part
        if overlap:
            raise StructuralError(f"{label} overlaps earlier sets at {sorted(overlap)[:5]}")
        seen |= part
    missing = set(h.vertices()) - seen
    if missing:
        raise StructuralError(f"coverage gap: vertices {sorted(missing)[:5]} are in no set")


def verify_separation(h: Graph, sep: Separation, alpha: float) -> SeparationVerdict:
    """Check that ``sep`` witnesses alpha-separability of ``h``.

    Malformed separations raise StructuralError; a well-formed separation that is too
    coarse yields a falsy verdict naming the violated condition.
    """
    check_structure(h, sep)
    certificate = sep.alpha_certificate
    limit = alpha * h.n + _TOL

    owner: Dict[int, int] = {}
    for i, part in enumerate(sep.components):
        for v in part:
            owner[v] = i
    for u, v in sorted(h.edges):
        if u in owner and v in owner and owner[u] != owner[v]:
            return SeparationVerdict(
                False, alpha, certificate,
                f"edge ({u}, {v}) joins components {owner[u]} and {owner[v]}",
            )

    if len(sep.S) > limit:
        return SeparationVerdict(
            False, alpha, certificate, f"|S| = {len(sep.S)} exceeds alpha*n = {alpha * h.n:g}"
        )
    for i, part in enumerate(sep.components):
        if len(part) > limit:
            return SeparationVerdict(
                False, alpha, certificate,
                f"component {i} has {len(part)} vertices, more than alpha*n = {alpha * h.n:g}",
            )
    return SeparationVerdict(True, alpha, certificate)


@dataclass(frozen=True)
class BandwidthOrdering:
    """A linear order of V(H); ``order[pos]`` is the vertex at position ``pos``."""

    order: Tuple[int, ...]
    width: int

    @classmethod
    def from_order(cls, h: Graph, order: Sequence[int]) -> "BandwidthOrdering":
        order = tuple(int(v) for v in order)
        if sorted(order) != list(range(h.n)):
            raise ArgumentError("ordering must be a permutation of the vertices")
        return cls(order, bandwidth_of(h, order))

    def positions(self) -> List[int]:
        pos = [0] * len(self.order)
        for p, v in enumerate(self.order):
            pos[v] = p
        return pos


def bandwidth_of(h: Graph, order: Sequence[int]) -> int:
    """Largest position difference over the edges of ``h`` under ``order``."""
    pos = {v: p for p, v in enumerate(order)}
    return max((abs(pos[u] - pos[v]) for u, v in h.edges), default=0)


def cuthill_mckee_ordering(h: Graph) -> BandwidthOrdering:
    """Reverse Cuthill-McKee ordering, a cheap low-bandwidth heuristic."""
    order = list(nx.utils.reverse_cuthill_mckee_ordering(h.to_networkx()))
    return BandwidthOrdering.from_order(h, order)


def bandwidth_separator(h: Graph, ordering: BandwidthOrdering, beta: float) -> Separation:
    """Cut a low-bandwidth ordering into intervals and keep every s-th one as separator.

    Rounding rule: m = floor(1/beta) intervals of length ceil(n/m) (the last ones may be
    short or empty), s = floor(sqrt(m)); intervals s, 2s, ... form S and the runs of
    intervals between them form the parts. The certified ratio is computed exactly.
    """
    if not 0 < beta <= 1:
        raise ArgumentError(f"beta must lie in (0, 1], got {beta}")
    n = h.n
    if len(ordering.order) != n:
        raise ArgumentError(f"ordering has {len(ordering.order)} positions, graph has {n}")

    pos = ordering.positions()
    limit = beta * n + _TOL
    worst = max(h.edges, key=lambda e: abs(pos[e[0]] - pos[e[1]]), default=None)
    if worst is not None and abs(pos[worst[0]] - pos[worst[1]]) > limit:
        u, v = worst
        raise PreconditionError(
            f"edge ({u}, {v}) spans {abs(pos[u] - pos[v])} positions, more than beta*n = {beta * n:g}",
            {"edge": [u, v], "stretch": abs(pos[u] - pos[v])},
        )

    m = max(1, math.floor(1 / beta + _TOL))
    s = max(1, math.isqrt(m))
    length = math.ceil(n / m) if n else 0
    separator: List[int] = []
    blocks: Dict[int, List[int]] = {}
    for i in range(1, m + 1):
        start, stop = (i - 1) * length, min(i * length, n)
        if start >= n:
            break
        interval = ordering.order[start:stop]
        if i % s == 0:
            separator.extend(interval)
        else:
            blocks.setdefault(i // s, []).extend(interval)

    note = f"m=floor(1/beta)={m}, s=floor(sqrt(m))={s}, interval length ceil(n/m)={length}"
    sep = Separation.build(separator, (blocks[j] for j in sorted(blocks)), n, note)
    logger.debug(f"bandwidth separator: |S|={len(sep.S)}, parts={len(sep.components)}, {note}")
    return sep


# Separator search

def _bit_components(adj_bits: List[int], alive: int, bound: int) -> Optional[List[int]]:
    """Components of the vertex mask ``alive``; None as soon as one exceeds ``bound``."""
    found = []
    rest = alive
    while rest:
        seed = rest & -rest
        comp = frontier = seed
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            fresh = adj_bits[low.bit_length() - 1] & rest & ~comp
            comp |= fresh
            frontier |= fresh
        if bin(comp).count("1") > bound:
            return None
        found.append(comp)
        rest &= ~comp
    return found


def _exact_separator(h: Graph, bound: int) -> Optional[Separation]:
    n = h.n
    adj_bits = [sum(1 << u for u in h.adjacency[v]) for v in range(n)]
    full = (1 << n) - 1
    # vertices of degree 0 never need to be in S
    candidates = [v for v in range(n) if adj_bits[v]]
    for size in range(1, bound + 1):
        for chosen in combinations(candidates, size):
            mask = sum(1 << v for v in chosen)
            parts = _bit_components(adj_bits, full & ~mask, bound)
            if parts is not None:
                return Separation.build(
                    chosen,
                    ([v for v in range(n) if part >> v & 1] for part in parts),
                    n,
                    "exact search",
                )
    return None


def _bfs_layers(view: nx.Graph, root: int) -> List[List[int]]:
    return [sorted(layer) for layer in nx.bfs_layers(view, [root])]


def _pseudo_peripheral(view: nx.Graph) -> int:
    start = min(view.nodes(), key=lambda v: (view.degree(v), v))
    return _bfs_layers(view, start)[-1][0]


def _sweep(view: nx.Graph, root: int, bound: int) -> FrozenSet[int]:
    """Walk the BFS layers of ``view``; a layer that would overflow the block is cut."""
    cut: List[int] = []
    block = 0
    for layer in _bfs_layers(view, root):
        if block + len(layer) <= bound:
            block += len(layer)
        else:
            cut.extend(layer)
            block = 0
    return frozenset(cut)


def _bisect(view: nx.Graph, root: int) -> FrozenSet[int]:
    """Smallest BFS layer among the middle half of the layers."""
    layers = _bfs_layers(view, root)
    if len(layers) < 3:
        return frozenset(v for layer in layers[1:] for v in layer) or frozenset([root])
    total = sum(len(layer) for layer in layers)
    best, best_key, seen = layers[1], None, 0
    for layer in layers[1:-1]:
        before = seen + len(layers[0]) if layer is layers[1] else seen
        seen += len(layer)
        balance = abs((total - len(layer)) / 2 - before)
        key = (len(layer), balance)
        if best_key is None or key < best_key:
            best, best_key = layer, key
    return frozenset(best)


def _refine(h: Graph, bound: int, strategy: str) -> Optional[FrozenSet[int]]:
    separator: set = set()
    while True:
        big = [c for c in components(h, separator) if len(c) > bound]
        if not big:
            return frozenset(separator)
        if len(separator) > bound:
            return None
        for part in big:
            view = h.to_networkx().subgraph(part.members)
            root = _pseudo_peripheral(view)
            cut = _sweep(view, root, bound) if strategy == "sweep" else _bisect(view, root)
            separator |= cut
        if len(separator) > bound:
            return None


def find_separator(h: Graph, alpha: float, exact_cap: Optional[int] = None) -> Optional[Separation]:
    """Search for an alpha-separation of ``h``; None means NOT_FOUND.

    Exhaustive for ``h.n <= exact_cap`` (then None proves non-separability); above the
    cap a BFS-layer sweep and recursive bisection are tried and None is inconclusive.
    """
    if not 0 < alpha <= 1:
        raise ArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    cap = settings.EXACT_SEPARATOR_CAP if exact_cap is None else exact_cap
    n = h.n
    if n == 0:
        return Separation.build((), (), 0)
    bound = math.floor(alpha * n + _TOL)

    parts = components(h)
    if all(len(c) <= bound for c in parts):
        return Separation.build((), (c.members for c in parts), n, "no separator needed")

    if n <= cap:
        sep = _exact_separator(h, bound)
        if sep is None:
            logger.debug(f"exact search: graph on {n} vertices is not {alpha}-separable")
        return sep

    best: Optional[FrozenSet[int]] = None
    for strategy in ("sweep", "bisect"):
        cut = _refine(h, bound, strategy)
        if cut is not None and (best is None or len(cut) < len(best)):
            best = cut
    if best is None:
        logger.debug(f"heuristics found no {alpha}-separator for a graph on {n} vertices")
        return None
    sep = Separation.build(best, (c.members for c in components(h, best)), n, "heuristic")
    return sep if verify_separation(h, sep, alpha) else None
