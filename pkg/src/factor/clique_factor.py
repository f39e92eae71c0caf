"""K_k-factors of the reduced graph: greedy packing, swap repair, exact fallback."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from config import settings
from src.errors import ArgumentError
from src.graph import Graph

logger = logging.getLogger(__name__)

Clique = Tuple[int, ...]


@dataclass(frozen=True)
class CliqueFactor:
    """Disjoint k-cliques of a graph plus the at most k-1 vertices they miss."""

    cliques: Tuple[Clique, ...]
    leftover: Tuple[int, ...]
    k: int

    @classmethod
    def build(cls, cliques: Sequence[Sequence[int]], leftover: Sequence[int], k: int) -> "CliqueFactor":
        ordered = sorted(tuple(sorted(c)) for c in cliques)
        return cls(tuple(ordered), tuple(sorted(leftover)), k)

    def partner_map(self) -> Dict[int, List[int]]:
        """clq: every covered vertex mapped to the other k-1 members of its clique."""
        return {v: [u for u in clique if u != v] for clique in self.cliques for v in clique}

    def clq(self, v: int) -> List[int]:
        partners = self.partner_map()
        if v not in partners:
            raise ArgumentError(f"vertex {v} is not covered by the factor")
        return partners[v]

    def clique_of(self, v: int) -> int:
        for index, clique in enumerate(self.cliques):
            if v in clique:
                return index
        raise ArgumentError(f"vertex {v} is not covered by the factor")

    @property
    def covered(self) -> List[int]:
        return sorted(v for clique in self.cliques for v in clique)

    def relabel(self, mapping: Mapping[int, int]) -> "CliqueFactor":
        """Renumber covered vertices through ``mapping``; leftovers are dropped."""
        return CliqueFactor.build([[mapping[v] for v in c] for c in self.cliques], [], self.k)

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "cliques": [list(c) for c in self.cliques], "leftover": list(self.leftover)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CliqueFactor":
        return cls.build(data["cliques"], data.get("leftover", []), int(data["k"]))


def verify_factor(gr: Graph, f: CliqueFactor, k: int) -> bool:
    """Disjoint k-cliques of ``gr``, leftover = the uncovered rest, at most k-1 of it."""
    if f.k != k or len(f.leftover) > k - 1:
        return False
    seen: Set[int] = set()
    for clique in f.cliques:
        if len(clique) != k or len(set(clique)) != k:
            return False
        if any(not 0 <= v < gr.n for v in clique) or seen & set(clique):
            return False
        if any(not gr.has_edge(u, v) for u, v in combinations(clique, 2)):
            return False
        seen |= set(clique)
    rest = set(gr.vertices()) - seen
    return set(f.leftover) == rest


def _cliques_in(adj: Sequence[FrozenSet[int]], pool: Set[int], k: int) -> Iterator[Clique]:
    """All k-cliques inside ``pool``, each once, in increasing vertex order."""

    def grow(clique: List[int], candidates: Set[int]) -> Iterator[Clique]:
        if len(clique) == k:
            yield tuple(clique)
            return
        for v in sorted(candidates):
            yield from grow(clique + [v], {u for u in candidates if u > v} & adj[v])

    yield from grow([], set(pool))


def _greedy_packing(gr: Graph, k: int) -> Tuple[List[Clique], Set[int]]:
    adj = gr.adjacency
    matrix = gr.adjacency_matrix().astype(np.int64)
    remaining = set(gr.vertices())
    cliques: List[Clique] = []

    while len(remaining) >= k:
        alive = np.zeros(gr.n, dtype=bool)
        alive[sorted(remaining)] = True
        degrees = matrix[:, alive].sum(axis=1)
        seeds = sorted(remaining, key=lambda v: (int(degrees[v]), v))
        found: Optional[Clique] = None
        for seed in seeds:
            clique = [seed]
            candidates = adj[seed] & remaining
            while len(clique) < k and candidates:
                need = k - len(clique) - 1
                viable = [c for c in candidates if len(adj[c] & candidates) >= need]
                if not viable:
                    break
                left = alive.copy()
                left[clique] = False
                base = degrees - matrix[:, clique].sum(axis=1)

                def remaining_min_degree(c: int) -> int:
                    mask = left.copy()
                    mask[c] = False
                    return int((base - matrix[:, c])[mask].min(initial=gr.n))

                best = max(viable, key=lambda c: (remaining_min_degree(c), -c))
                clique.append(best)
                candidates = candidates & adj[best]
            if len(clique) == k:
                found = tuple(sorted(clique))
                break
        if found is None:
            break
        cliques.append(found)
        remaining -= set(found)
    return cliques, remaining


def _swap_repair(
    gr: Graph, k: int, cliques: List[Clique], unused: Set[int], target: int
) -> Tuple[List[Clique], Set[int]]:
    """Replace one clique Q by two disjoint cliques inside U + Q while that helps."""
    adj = gr.adjacency
    improved = True
    while improved and len(cliques) < target:
        improved = False
        # a clique fully inside U is a free gain
        extra = next(_cliques_in(adj, unused, k), None)
        if extra is not None:
            cliques.append(extra)
            unused -= set(extra)
            improved = True
            continue
        for index, old in enumerate(cliques):
            pool = unused | set(old)
            options = list(_cliques_in(adj, pool, k))
            pair = next(
                ((a, b) for a, b in combinations(options, 2) if not set(a) & set(b)),
                None,
            )
            if pair is None:
                continue
            cliques[index] = pair[0]
            cliques.append(pair[1])
            unused = pool - set(pair[0]) - set(pair[1])
            improved = True
            logger.debug(f"swap repair replaced {old} by {pair[0]} and {pair[1]}")
            break
    return cliques, unused


def _exact_factor(gr: Graph, k: int, target: int) -> Optional[List[Clique]]:
    """Branch and bound over vertex bitmasks for ``target`` disjoint k-cliques."""
    ell = gr.n
    nbits = [sum(1 << u for u in gr.adjacency[v]) for v in range(ell)]
    budget = ell - k * target

    def cliques_through(v: int, mask: int) -> Iterator[int]:
        def grow(members: int, candidates: int, size: int) -> Iterator[int]:
            if size == k:
                yield members
                return
            rest = candidates
            while rest:
                low = rest & -rest
                rest ^= low
                u = low.bit_length() - 1
                # only larger vertices follow, so each clique is produced once
                yield from grow(members | low, rest & nbits[u], size + 1)

        yield from grow(1 << v, mask & nbits[v] & ~((1 << (v + 1)) - 1), 1)

    @lru_cache(maxsize=None)
    def solve(mask: int, skips: int) -> Optional[Tuple[int, ...]]:
        if bin(mask).count("1") <= skips:
            return ()
        v = (mask & -mask).bit_length() - 1
        for clique in cliques_through(v, mask):
            rest = solve(mask & ~clique, skips)
            if rest is not None:
                return (clique,) + rest
        if skips:
            return solve(mask & ~(1 << v), skips - 1)
        return None

    found = solve((1 << ell) - 1, budget)
    solve.cache_clear()
    if found is None:
        return None
    return [tuple(v for v in range(ell) if c >> v & 1) for c in found][:target]


def find_kfactor(gr: Graph, k: int, exact_cap: Optional[int] = None) -> Optional[CliqueFactor]:
    """K_k-factor of ``gr`` missing at most k-1 vertices, or None when none was found.

    Greedy packing (lowest-degree seed, partners keeping the remaining minimum degree
    high), then swap repair, then an exhaustive search when ``gr.n <= exact_cap``. A
    None from the exhaustive regime means no such factor exists.
    """
    if k < 2:
        raise ArgumentError(f"k must be at least 2, got {k}")
    ell = gr.n
    if k > ell:
        raise ArgumentError(f"k = {k} exceeds the number of vertices {ell}")
    cap = settings.EXACT_FACTOR_CAP if exact_cap is None else exact_cap
    target = ell // k

    cliques, unused = _greedy_packing(gr, k)
    if len(cliques) < target:
        cliques, unused = _swap_repair(gr, k, cliques, unused, target)
    if len(cliques) < target and ell <= cap:
        logger.debug(f"greedy and swap repair found {len(cliques)} of {target} cliques, searching exactly")
        exact = _exact_factor(gr, k, target)
        if exact is not None:
            cliques = exact
            unused = set(gr.vertices()) - {v for c in exact for v in c}
    if len(cliques) < target:
        logger.info(f"no K_{k}-factor found: {len(cliques)} of {target} cliques")
        return None
    return CliqueFactor.build(cliques, sorted(unused), k)
