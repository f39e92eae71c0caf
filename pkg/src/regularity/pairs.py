"""Regularity certificates for a single cluster pair.

A pair (A, B) is eps-regular when every X in A, Y in B with |X| > eps|A| and
|Y| > eps|B| has |d(X, Y) - d(A, B)| < eps. Exact certification enumerates every X and,
for each size of Y, only the two extreme choices of Y (the t vertices of B with the most
or the fewest neighbours in X); no other Y can be further from d(A, B).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Tuple, Union

import numpy as np
from scipy.stats import binom

from config import settings
from src.errors import ArgumentError, PreconditionError, RegimeError
from src.graph import Graph, VertexSetLike, density, members_of

logger = logging.getLogger(__name__)

RandomLike = Union[None, int, np.random.Generator]


class PairStatus(str, Enum):
    CERTIFIED = "certified-regular"
    REFUTED = "refuted"
    UNCERTIFIED = "uncertified"
    SAMPLED = "sampled-regular"


@dataclass(frozen=True)
class Witness:
    """Subsets X, Y whose density is at least eps away from the pair density."""

    X: FrozenSet[int]
    Y: FrozenSet[int]
    density: float
    gap: float

    def to_dict(self) -> Dict[str, Any]:
        return {"X": sorted(self.X), "Y": sorted(self.Y), "density": self.density, "gap": self.gap}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Witness":
        return cls(frozenset(data["X"]), frozenset(data["Y"]), data["density"], data["gap"])


@dataclass(frozen=True)
class SuperRegularity:
    """Minimum cross degrees of a pair against the (eps, delta) super-regularity bar."""

    eps: float
    delta: float
    min_degree_a: int
    min_degree_b: int
    holds: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eps": self.eps,
            "delta": self.delta,
            "min_degree_a": self.min_degree_a,
            "min_degree_b": self.min_degree_b,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class PairCertificate:
    pair: Tuple[int, int]
    density: float
    status: PairStatus
    eps: float
    method: str = "exact"
    witness: Optional[Witness] = None
    super: Optional[SuperRegularity] = None

    @property
    def certified(self) -> bool:
        return self.status is PairStatus.CERTIFIED

    @property
    def refuted(self) -> bool:
        return self.status is PairStatus.REFUTED

    @property
    def sampled(self) -> bool:
        return self.status is PairStatus.SAMPLED

    def with_super(self, info: SuperRegularity) -> "PairCertificate":
        return replace(self, super=info)

    def relabel(self, pair: Tuple[int, int]) -> "PairCertificate":
        return replace(self, pair=pair)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "pair": list(self.pair),
            "density": self.density,
            "status": self.status.value,
            "eps": self.eps,
            "method": self.method,
            "witness": self.witness.to_dict() if self.witness else None,
            "super": self.super.to_dict() if self.super else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PairCertificate":
        sup = data.get("super")
        return cls(
            pair=(int(data["pair"][0]), int(data["pair"][1])),
            density=float(data["density"]),
            status=PairStatus(data["status"]),
            eps=float(data["eps"]),
            method=data.get("method", "exact"),
            witness=Witness.from_dict(data["witness"]) if data.get("witness") else None,
            super=SuperRegularity(**sup) if sup else None,
        )


def qualifying_size(eps: float, size: int) -> int:
    """Smallest integer t with t > eps * size."""
    return math.floor(eps * size) + 1


def _pair_sets(g: Graph, A: VertexSetLike, B: VertexSetLike) -> Tuple[list, list, float]:
    xs, ys = members_of(g, A), members_of(g, B)
    d_ab = density(g, xs, ys)
    return sorted(xs), sorted(ys), d_ab


def _best_side(counts: np.ndarray, other: int, smallest: int, d_ab: float) -> Tuple[float, int, bool]:
    """Best size t >= smallest and direction for choosing t rows of ``counts``.

    Returns (gap, t, top) where ``top`` means the t largest counts were taken.
    """
    size = counts.shape[0]
    if smallest > size:
        return -1.0, 0, True
    ascending = np.sort(counts)
    t = np.arange(1, size + 1)
    bottom = np.cumsum(ascending)
    top = np.cumsum(ascending[::-1])
    denom = other * t
    gap_top = np.abs(top / denom - d_ab)
    gap_bottom = np.abs(bottom / denom - d_ab)
    gap_top[: smallest - 1] = -1.0
    gap_bottom[: smallest - 1] = -1.0
    i_top, i_bottom = int(np.argmax(gap_top)), int(np.argmax(gap_bottom))
    if gap_top[i_top] >= gap_bottom[i_bottom]:
        return float(gap_top[i_top]), i_top + 1, True
    return float(gap_bottom[i_bottom]), i_bottom + 1, False


def _extreme(counts: np.ndarray, labels: list, t: int, top: bool) -> FrozenSet[int]:
    order = np.argsort(-counts if top else counts, kind="stable")
    return frozenset(labels[i] for i in order[:t])


def _replayed(
    g: Graph, pair: Tuple[int, int], d_ab: float, eps: float, X: FrozenSet[int], Y: FrozenSet[int], method: str
) -> Optional[PairCertificate]:
    """Refuting certificate for (X, Y) if density() confirms the gap, else None."""
    d_xy = density(g, X, Y)
    gap = abs(d_xy - d_ab)
    if gap < eps:
        return None
    return PairCertificate(pair, d_ab, PairStatus.REFUTED, eps, method, Witness(X, Y, d_xy, gap))


def check_regular_exact(
    g: Graph,
    A: VertexSetLike,
    B: VertexSetLike,
    eps: float,
    pair: Tuple[int, int] = (0, 1),
    exact_cap: Optional[int] = None,
) -> PairCertificate:
    """Decide eps-regularity of (A, B) exactly; refutations carry a concrete witness."""
    cap = settings.EXACT_REGULARITY_CAP if exact_cap is None else exact_cap
    a_list, b_list, d_ab = _pair_sets(g, A, B)
    a, b = len(a_list), len(b_list)
    if a > cap or b > cap:
        raise RegimeError(
            f"exact regularity check is limited to clusters of size {cap}, got {a} and {b}; "
            f"use check_regular_heuristic",
            {"sizes": [a, b], "cap": cap},
        )
    x_min, y_min = qualifying_size(eps, a), qualifying_size(eps, b)
    certified = PairCertificate(pair, d_ab, PairStatus.CERTIFIED, eps, "exact")
    if x_min > a or y_min > b or (x_min == a and y_min == b):
        # only X = A, Y = B qualify (or nothing does)
        return certified

    sub = g.adjacency_matrix()[np.ix_(a_list, b_list)].astype(np.int64)
    masks = np.arange(1, 1 << a, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(a)) & 1).astype(np.int64)
    sizes = bits.sum(axis=1)
    keep = sizes >= x_min
    bits, sizes = bits[keep], sizes[keep]

    counts = bits @ sub
    ascending = np.sort(counts, axis=1)
    t = np.arange(1, b + 1)
    denom = sizes[:, None] * t[None, :]
    gaps_bottom = np.abs(np.cumsum(ascending, axis=1) / denom - d_ab)
    gaps_top = np.abs(np.cumsum(ascending[:, ::-1], axis=1) / denom - d_ab)
    gaps_bottom[:, : y_min - 1] = -1.0
    gaps_top[:, : y_min - 1] = -1.0

    for gaps, top in ((gaps_top, True), (gaps_bottom, False)):
        row, col = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
        if gaps[row, col] < eps:
            continue
        X = frozenset(a_list[i] for i in np.flatnonzero(bits[row]))
        Y = _extreme(counts[row], b_list, int(col) + 1, top)
        refuted = _replayed(g, pair, d_ab, eps, X, Y, "exact")
        if refuted is not None:
            return refuted
    return certified


def check_regular_heuristic(
    g: Graph,
    A: VertexSetLike,
    B: VertexSetLike,
    eps: float,
    trials: Optional[int] = None,
    rng: RandomLike = None,
    pair: Tuple[int, int] = (0, 1),
    rounds: int = 4,
) -> PairCertificate:
    """Randomized witness search by alternating optimization of X and Y.

    Sound but incomplete: the result is refuted (with a replayable witness) or
    uncertified, never certified.
    """
    trials = settings.REGULARITY_TRIALS if trials is None else trials
    rng = np.random.default_rng(rng)
    a_list, b_list, d_ab = _pair_sets(g, A, B)
    a, b = len(a_list), len(b_list)
    uncertified = PairCertificate(pair, d_ab, PairStatus.UNCERTIFIED, eps, "heuristic")
    x_min, y_min = qualifying_size(eps, a), qualifying_size(eps, b)
    if x_min > a or y_min > b:
        return uncertified

    sub = g.adjacency_matrix()[np.ix_(a_list, b_list)].astype(np.int64)
    for trial in range(trials):
        x_size = int(rng.integers(x_min, a + 1))
        x_mask = np.zeros(a, dtype=bool)
        x_mask[rng.choice(a, size=x_size, replace=False)] = True
        best = -1.0
        for _ in range(rounds):
            into_x = x_mask.astype(np.int64) @ sub
            _, t, top = _best_side(into_x, int(x_mask.sum()), y_min, d_ab)
            y_idx = np.argsort(-into_x if top else into_x, kind="stable")[:t]
            y_mask = np.zeros(b, dtype=bool)
            y_mask[y_idx] = True

            into_y = sub @ y_mask.astype(np.int64)
            gap, s, top = _best_side(into_y, t, x_min, d_ab)
            x_idx = np.argsort(-into_y if top else into_y, kind="stable")[:s]
            x_mask = np.zeros(a, dtype=bool)
            x_mask[x_idx] = True

            if gap >= eps:
                X = frozenset(a_list[i] for i in x_idx)
                Y = frozenset(b_list[i] for i in y_idx)
                refuted = _replayed(g, pair, d_ab, eps, X, Y, "heuristic")
                if refuted is not None:
                    logger.debug(f"pair {pair} refuted in trial {trial}, gap {refuted.witness.gap:.3f}")
                    return refuted
            if gap <= best:
                break
            best = gap
    return uncertified


def _tail_probability(edges: int, cells: int, d_ab: float) -> float:
    """Binomial tail of observing ``edges`` or something further from the mean."""
    if edges < d_ab * cells:
        return float(binom.cdf(edges, cells, d_ab))
    return float(binom.sf(edges - 1, cells, d_ab))


def check_regular_sampled(
    g: Graph,
    A: VertexSetLike,
    B: VertexSetLike,
    eps: float,
    samples: Optional[int] = None,
    rng: RandomLike = None,
    pair: Tuple[int, int] = (0, 1),
    significance: Optional[float] = None,
) -> PairCertificate:
    """Test the pair on uniformly random qualifying subsets X, Y.

    A sample refutes the pair only when its gap is at least eps and its edge count is
    improbable (tail below ``significance``) for a uniformly random pair of density
    d(A, B). Small qualifying sets deviate by eps in every random pair; this keeps
    them from refuting pairs that are random-like. Surviving pairs are marked
    sampled-regular, which is evidence and not a certificate.
    """
    samples = settings.REGULARITY_SAMPLES if samples is None else samples
    significance = settings.SAMPLED_SIGNIFICANCE if significance is None else significance
    rng = np.random.default_rng(rng)
    a_list, b_list, d_ab = _pair_sets(g, A, B)
    a, b = len(a_list), len(b_list)
    sampled = PairCertificate(pair, d_ab, PairStatus.SAMPLED, eps, "sampled")
    x_min, y_min = qualifying_size(eps, a), qualifying_size(eps, b)
    if x_min > a or y_min > b or d_ab in (0.0, 1.0):
        # empty and complete pairs are regular outright
        return replace(sampled, status=PairStatus.CERTIFIED)

    sub = g.adjacency_matrix()[np.ix_(a_list, b_list)].astype(np.int64)
    worst = 1.0
    for _ in range(samples):
        s, t = int(rng.integers(x_min, a + 1)), int(rng.integers(y_min, b + 1))
        x_idx = rng.choice(a, size=s, replace=False)
        y_idx = rng.choice(b, size=t, replace=False)
        edges = int(sub[np.ix_(x_idx, y_idx)].sum())
        if abs(edges / (s * t) - d_ab) < eps:
            continue
        tail = _tail_probability(edges, s * t, d_ab)
        worst = min(worst, tail)
        if tail >= significance:
            continue
        X = frozenset(a_list[i] for i in x_idx)
        Y = frozenset(b_list[i] for i in y_idx)
        refuted = _replayed(g, pair, d_ab, eps, X, Y, "sampled")
        if refuted is not None:
            return refuted
    logger.debug(f"pair {pair} survived {samples} samples, smallest tail {worst:.2e}")
    return sampled


def certify_pair(
    g: Graph,
    A: VertexSetLike,
    B: VertexSetLike,
    eps: float,
    pair: Tuple[int, int] = (0, 1),
    rng: RandomLike = None,
    exact_cap: Optional[int] = None,
    trials: Optional[int] = None,
    method: str = "search",
) -> PairCertificate:
    """Exact check inside the exact regime; above it, the adversarial witness search
    (``method="search"``) or the significance-tested sampler (``method="sampled"``).
    """
    if method not in ("search", "sampled"):
        raise ArgumentError(f"unknown certification method {method!r}; use 'search' or 'sampled'")
    cap = settings.EXACT_REGULARITY_CAP if exact_cap is None else exact_cap
    if len(members_of(g, A)) <= cap and len(members_of(g, B)) <= cap:
        return check_regular_exact(g, A, B, eps, pair, cap)
    if method == "sampled":
        return check_regular_sampled(g, A, B, eps, trials, rng, pair)
    return check_regular_heuristic(g, A, B, eps, trials, rng, pair)


def low_degree_count(
    g: Graph,
    A: VertexSetLike,
    B: VertexSetLike,
    Y: VertexSetLike,
    d: float,
    eps: float,
) -> int:
    """|{x in A : deg(x, Y) <= (d - eps)|Y|}| for Y in B with |Y| > eps|B|."""
    xs, bs, ys = members_of(g, A), members_of(g, B), members_of(g, Y)
    if not ys <= bs:
        raise ArgumentError("Y must be a subset of B")
    if len(ys) <= eps * len(bs):
        raise PreconditionError(
            f"|Y| = {len(ys)} must exceed eps*|B| = {eps * len(bs):g}",
            {"Y": len(ys), "B": len(bs), "eps": eps},
        )
    limit = (d - eps) * len(ys)
    adj = g.adjacency
    return sum(1 for x in xs if len(adj[x] & ys) <= limit)


def super_regularity(g: Graph, A: VertexSetLike, B: VertexSetLike, eps: float, delta: float) -> SuperRegularity:
    """Cross minimum degrees of (A, B) checked against deg > delta * |other side|."""
    xs, ys = members_of(g, A), members_of(g, B)
    adj = g.adjacency
    min_a = min((len(adj[x] & ys) for x in xs), default=0)
    min_b = min((len(adj[y] & xs) for y in ys), default=0)
    holds = delta <= 0 or (min_a > delta * len(ys) and min_b > delta * len(xs))
    return SuperRegularity(eps, delta, min_a, min_b, holds)
