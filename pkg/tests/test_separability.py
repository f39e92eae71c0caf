"""Tests for separations, the bandwidth decomposition and separator search."""
import math
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.errors import ArgumentError, PreconditionError, StructuralError
from src.graph import Graph, components
from src.separability import (
    BandwidthOrdering,
    Separation,
    bandwidth_of,
    bandwidth_separator,
    check_structure,
    cuthill_mckee_ordering,
    find_separator,
    verify_separation,
)


def path_power(n: int, b: int) -> Graph:
    return Graph(n, [(i, i + j) for i in range(n) for j in range(1, b + 1) if i + j < n])


def is_separable(h: Graph, alpha: float) -> bool:
    """Exhaustive oracle over every vertex subset."""
    bound = math.floor(alpha * h.n + 1e-9)
    for size in range(0, bound + 1):
        for S in combinations(range(h.n), size):
            if all(len(c) <= bound for c in components(h, S)):
                return True
    return False


class TestVerifySeparation:
    """Test separation certificates."""

    def test_star_center(self):
        """Test that the centre of K_{1,9} separates it into singletons."""
        h = Graph.from_networkx(nx.star_graph(9))
        sep = Separation.build({0}, [[v] for v in range(1, 10)], 10)
        verdict = verify_separation(h, sep, 0.1)
        assert verdict
        assert verdict.certificate == pytest.approx(0.1)

    def test_clique_is_not_separable(self):
        """Test that removing one vertex of K_10 leaves a big component."""
        h = Graph.complete(10)
        sep = Separation.build({0}, [range(1, 10)], 10)
        verdict = verify_separation(h, sep, 0.1)
        assert not verdict
        assert "component 0" in verdict.violation

    def test_grid_middle_row(self):
        """Test the middle row of the 5x5 grid at alpha = 0.4."""
        h = Graph.grid(5, 5)
        sep = Separation.build(range(10, 15), [range(0, 10), range(15, 25)], 25)
        verdict = verify_separation(h, sep, 0.4)
        assert verdict
        assert [len(c) for c in sep.components] == [10, 10]

    def test_cross_edge_is_reported(self):
        """Test that parts joined by an edge are rejected."""
        h = Graph.path(4)
        sep = Separation.build((), [[0, 1], [2, 3]], 4)
        verdict = verify_separation(h, sep, 1.0)
        assert not verdict
        assert verdict.violation.startswith("edge (1, 2)")

    def test_separator_too_large(self):
        """Test that |S| above alpha*n is reported."""
        h = Graph.path(4)
        sep = Separation.build({1, 2}, [[0], [3]], 4)
        verdict = verify_separation(h, sep, 0.25)
        assert not verdict
        assert "|S|" in verdict.violation

    def test_overlap_is_structural(self):
        """Test that overlapping sets raise instead of returning False."""
        h = Graph.path(3)
        with pytest.raises(StructuralError):
            verify_separation(h, Separation.build({1}, [[0, 1], [2]], 3), 0.5)

    def test_coverage_gap_is_structural(self):
        """Test that an uncovered vertex raises."""
        with pytest.raises(StructuralError):
            check_structure(Graph.path(3), Separation.build({1}, [[0]], 3))

    def test_from_dict_needs_n(self):
        """Test that deserialization needs the vertex count."""
        with pytest.raises(ArgumentError):
            Separation.from_dict({"S": [], "components": [[0]]})
        sep = Separation.from_dict({"S": [1], "components": [[0], [2]]}, n=3)
        assert sep.alpha_certificate == pytest.approx(1 / 3)


class TestBandwidthSeparator:
    """Test the interval decomposition of low-bandwidth orderings."""

    def test_path_16(self):
        """Test the hand-computed decomposition of P_16 at beta = 1/16."""
        h = Graph.path(16)
        sep = bandwidth_separator(h, BandwidthOrdering.from_order(h, range(16)), 1 / 16)
        assert sep.S == frozenset({3, 7, 11, 15})
        assert [sorted(c) for c in sep.components] == [[0, 1, 2], [4, 5, 6], [8, 9, 10], [12, 13, 14]]
        assert verify_separation(h, sep, 0.25)

    def test_edgeless_graph_keeps_interval_structure(self):
        """Test that an edgeless graph gets the same intervals."""
        h = Graph(10)
        sep = bandwidth_separator(h, BandwidthOrdering.from_order(h, range(10)), 0.25)
        assert sep.S == frozenset({3, 4, 5, 9})
        assert [sorted(c) for c in sep.components] == [[0, 1, 2], [6, 7, 8]]
        assert "m=floor(1/beta)=4" in sep.note

    def test_cycle_violates_width(self):
        """Test that the closing edge of C_16 breaks the width precondition."""
        h = Graph.cycle(16)
        with pytest.raises(PreconditionError) as exc_info:
            bandwidth_separator(h, BandwidthOrdering.from_order(h, range(16)), 1 / 16)
        assert exc_info.value.context["edge"] == [0, 15]

    def test_beta_range(self):
        """Test that beta must lie in (0, 1]."""
        h = Graph.path(4)
        with pytest.raises(ArgumentError):
            bandwidth_separator(h, BandwidthOrdering.from_order(h, range(4)), 0)

    def test_ordering_must_be_permutation(self):
        """Test that an ordering repeating a vertex is rejected."""
        with pytest.raises(ArgumentError):
            BandwidthOrdering.from_order(Graph.path(3), [0, 0, 1])

    def test_cuthill_mckee_recovers_path_width(self):
        """Test that reverse Cuthill-McKee finds width 1 on a relabelled path."""
        perm = np.random.default_rng(3).permutation(30)
        h = Graph(30, [(int(perm[i]), int(perm[i + 1])) for i in range(29)])
        ordering = cuthill_mckee_ordering(h)
        assert ordering.width == 1
        assert bandwidth_of(h, ordering.order) == 1

    def test_path_powers_certify_sqrt_beta(self):
        """Test 200 seeded path powers against the sqrt(beta) bound plus rounding slack."""
        rng = np.random.default_rng(2024)
        betas = [1 / 16, 1 / 25, 1 / 100]
        for trial in range(200):
            beta = betas[trial % 3]
            n = int(rng.integers(max(50, math.ceil(1 / beta)), 501))
            b = max(1, int(rng.integers(1, math.floor(beta * n) + 1)))
            h = path_power(n, b)
            sep = bandwidth_separator(h, BandwidthOrdering.from_order(h, range(n)), beta)
            s = math.isqrt(math.floor(1 / beta + 1e-9))
            assert sep.alpha_certificate <= math.sqrt(beta) + s / n + 1e-9
            assert verify_separation(h, sep, sep.alpha_certificate)
            assert len(sep.S) <= n / s + s


class TestFindSeparator:
    """Test separator search."""

    def test_disconnected_forest_needs_no_separator(self):
        """Test that ten disjoint edges are already 0.1-separated."""
        h = Graph(20, [(2 * i, 2 * i + 1) for i in range(10)])
        sep = find_separator(h, 0.1)
        assert sep.S == frozenset()
        assert len(sep.components) == 10

    def test_long_path_heuristic(self):
        """Test the sweep on P_100 at alpha = 0.1."""
        h = Graph.path(100)
        sep = find_separator(h, 0.1)
        assert sep is not None
        assert len(sep.S) <= 10
        assert all(len(c) <= 10 for c in sep.components)

    def test_large_clique_not_found(self):
        """Test that K_20 at alpha = 0.2 yields NOT_FOUND."""
        assert find_separator(Graph.complete(20), 0.2) is None

    def test_small_clique_exact_none(self):
        """Test that the exact regime proves K_6 is not 0.34-separable."""
        assert find_separator(Graph.complete(6), 0.34) is None

    def test_alpha_range(self):
        """Test that alpha must lie in (0, 1]."""
        with pytest.raises(ArgumentError):
            find_separator(Graph.path(3), 1.5)

    def test_empty_graph(self):
        """Test the graph without vertices."""
        sep = find_separator(Graph(0), 0.5)
        assert sep.S == frozenset() and sep.components == ()

    def test_components_match_graph_core(self):
        """Test that listed parts are exactly the components of H - S."""
        h = Graph.grid(6, 6)
        sep = find_separator(h, 0.4)
        assert sep is not None
        listed = sorted(sorted(c) for c in sep.components)
        assert listed == sorted(c.to_list() for c in components(h, sep.S))

    @hsettings(max_examples=80, deadline=None)
    @given(
        st.integers(min_value=1, max_value=8).flatmap(
            lambda n: st.tuples(
                st.just(n),
                st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=16),
            )
        ),
        st.sampled_from([0.2, 0.25, 0.34, 0.5]),
    )
    def test_exact_regime_matches_oracle(self, instance, alpha):
        """Test the exact search against exhaustive enumeration."""
        n, pairs = instance
        h = Graph(n, {(min(u, v), max(u, v)) for u, v in pairs if u != v})
        sep = find_separator(h, alpha)
        assert (sep is not None) == is_separable(h, alpha)
        if sep is not None:
            assert verify_separation(h, sep, alpha)
