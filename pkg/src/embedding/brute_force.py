"""Exact subgraph embedding by backtracking, for tiny pattern graphs."""
import logging
from typing import Dict, List, Optional, Set

from config import settings
from src.errors import RegimeError
from src.graph import Graph

from .embedder import Embedding

logger = logging.getLogger(__name__)


def _search_order(h: Graph) -> List[int]:
    """Highest degree first, then always the vertex with most already-ordered neighbours."""
    order: List[int] = []
    remaining = set(h.vertices())
    adj = h.adjacency
    while remaining:
        placed = set(order)
        x = max(remaining, key=lambda v: (len(adj[v] & placed), len(adj[v]), -v))
        order.append(x)
        remaining.discard(x)
    return order


def brute_force_embed(h: Graph, g: Graph, cap: Optional[int] = None) -> Optional[Embedding]:
    """Injective edge-preserving map H -> G, or None when none exists."""
    cap = settings.BRUTE_FORCE_CAP if cap is None else cap
    if h.n > cap:
        raise RegimeError(f"brute-force embedding is limited to {cap} pattern vertices, got {h.n}")
    if h.n > g.n:
        return None
    hadj, gadj = h.adjacency, g.adjacency
    gdeg = [len(a) for a in gadj]
    order = _search_order(h)
    phi: Dict[int, int] = {}
    used: Set[int] = set()

    def candidates(x: int) -> Set[int]:
        options = {v for v in g.vertices() if v not in used and gdeg[v] >= len(hadj[x])}
        for y in hadj[x]:
            if y in phi:
                options &= gadj[phi[y]]
        return options

    def forward_ok() -> bool:
        # every unplaced vertex with a placed neighbour must still have somewhere to go
        return all(candidates(y) for y in order if y not in phi and any(z in phi for z in hadj[y]))

    def solve(depth: int) -> bool:
        if depth == len(order):
            return True
        x = order[depth]
        for v in sorted(candidates(x)):
            phi[x] = v
            used.add(v)
            if forward_ok() and solve(depth + 1):
                return True
            del phi[x]
            used.discard(v)
        return False

    if not solve(0):
        logger.debug(f"no embedding of {h!r} into {g!r}")
        return None
    return Embedding(tuple(phi[x] for x in range(h.n)))
