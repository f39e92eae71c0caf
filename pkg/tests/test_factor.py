"""Tests for clique factors of reduced graphs."""
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.errors import ArgumentError
from src.factor import CliqueFactor, find_kfactor, verify_factor
from src.graph import Graph, min_degree


def max_disjoint_cliques(g: Graph, k: int, goal: int) -> int:
    """Largest number of vertex-disjoint k-cliques up to ``goal``, by exhaustive search."""
    cliques = [
        c for c in combinations(range(g.n), k)
        if all(g.has_edge(u, v) for u, v in combinations(c, 2))
    ]

    def best(start: int, used: frozenset) -> int:
        top = 0
        for index in range(start, len(cliques)):
            if used.isdisjoint(cliques[index]):
                top = max(top, 1 + best(index + 1, used | set(cliques[index])))
                if top >= goal - len(used) // k:
                    break
        return top

    return best(0, frozenset())


def dense_random_graph(ell: int, k: int, seed: int) -> Graph:
    """Random graph with minimum degree at least (1 - 1/k) * ell."""
    rng = np.random.default_rng(seed)
    floor = int(np.ceil((1 - 1 / k) * ell))
    edges = {(u, v) for u in range(ell) for v in range(u + 1, ell)}
    degree = [ell - 1] * ell
    for u, v in [tuple(e) for e in rng.permutation(sorted(edges))]:
        if degree[u] > floor and degree[v] > floor and rng.random() < 0.7:
            edges.discard((int(u), int(v)))
            degree[u] -= 1
            degree[v] -= 1
    return Graph(ell, edges)


class TestCliqueFactor:
    """Test the factor value type."""

    def test_partners(self):
        """Test that clq(v) lists the other members of v's clique."""
        factor = CliqueFactor.build([(5, 3, 4), (0, 1, 2)], [6], 3)
        assert factor.cliques == ((0, 1, 2), (3, 4, 5))
        assert factor.clq(4) == [3, 5]
        assert factor.clique_of(4) == 1
        assert factor.covered == [0, 1, 2, 3, 4, 5]

    def test_uncovered_vertex_has_no_partners(self):
        """Test that a leftover vertex has no clique."""
        factor = CliqueFactor.build([(0, 1)], [2], 2)
        with pytest.raises(ArgumentError):
            factor.clq(2)

    def test_relabel_drops_leftover(self):
        """Test renumbering covered vertices."""
        factor = CliqueFactor.build([(1, 3)], [0], 2).relabel({1: 0, 3: 1})
        assert factor.cliques == ((0, 1),)
        assert factor.leftover == ()

    def test_from_dict(self):
        """Test loading a serialized factor."""
        factor = CliqueFactor.from_dict({"k": 2, "cliques": [[2, 3], [0, 1]]})
        assert factor == CliqueFactor.build([(0, 1), (2, 3)], [], 2)


class TestFindKFactor:
    """Test factor search."""

    def test_k4_perfect_matching(self):
        """Test that K_4 splits into two disjoint edges."""
        factor = find_kfactor(Graph.complete(4), 2)
        assert len(factor.cliques) == 2
        assert factor.leftover == ()
        assert verify_factor(Graph.complete(4), factor, 2)

    def test_c5_below_threshold(self):
        """Test that C_5 still has a matching of two edges with one vertex left."""
        g = Graph.cycle(5)
        factor = find_kfactor(g, 2)
        assert len(factor.cliques) == 2
        assert len(factor.leftover) == 1
        assert verify_factor(g, factor, 2)

    def test_star_has_no_factor(self):
        """Test that the exhaustive regime proves K_{1,3} has no perfect matching."""
        g = Graph(4, [(0, 1), (0, 2), (0, 3)])
        assert find_kfactor(g, 2) is None

    def test_k_too_large(self):
        """Test that k above the vertex count is rejected."""
        with pytest.raises(ArgumentError):
            find_kfactor(Graph.complete(3), 4)

    def test_k_too_small(self):
        """Test that k must be at least 2."""
        with pytest.raises(ArgumentError):
            find_kfactor(Graph.complete(3), 1)

    def test_dense_graphs_always_factor(self):
        """Test 100 random graphs on 12 vertices above the degree threshold for k = 3."""
        for seed in range(100):
            g = dense_random_graph(12, 3, seed)
            assert min_degree(g) >= 8
            factor = find_kfactor(g, 3)
            assert factor is not None
            assert verify_factor(g, factor, 3)
            assert len(factor.cliques) == 4 == max_disjoint_cliques(g, 3, 4)

    def test_large_complete_graph(self):
        """Test greedy packing alone on a reduced graph above the exhaustive cap."""
        g = Graph.complete(40)
        factor = find_kfactor(g, 3, exact_cap=0)
        assert len(factor.cliques) == 13
        assert len(factor.leftover) == 1

    @hsettings(max_examples=60, deadline=None)
    @given(
        st.integers(min_value=2, max_value=9).flatmap(
            lambda n: st.tuples(
                st.just(n),
                st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=30),
            )
        ),
        st.sampled_from([2, 3]),
    )
    def test_exhaustive_regime_matches_oracle(self, instance, k):
        """Test that a factor is found exactly when enough disjoint cliques exist."""
        n, pairs = instance
        if k > n:
            return
        g = Graph(n, {(min(u, v), max(u, v)) for u, v in pairs if u != v})
        factor = find_kfactor(g, k)
        assert (factor is not None) == (max_disjoint_cliques(g, k, n // k) >= n // k)
        if factor is not None:
            assert verify_factor(g, factor, k)


class TestVerifyFactor:
    """Test factor verification."""

    def test_found_factor_verifies(self):
        """Test find_kfactor output on K_6 with k = 3."""
        g = Graph.complete(6)
        assert verify_factor(g, find_kfactor(g, 3), 3)

    def test_non_edge_inside_clique(self):
        """Test that a clique with a missing edge is rejected."""
        g = Graph.complete(6).without_edges([(0, 1)])
        assert not verify_factor(g, CliqueFactor.build([(0, 1, 2), (3, 4, 5)], [], 3), 3)

    def test_overlapping_cliques(self):
        """Test that cliques must be disjoint."""
        g = Graph.complete(6)
        assert not verify_factor(g, CliqueFactor.build([(0, 1, 2), (2, 3, 4)], [5], 3), 3)

    def test_leftover_must_match_uncovered(self):
        """Test that the leftover list is exactly the uncovered vertices."""
        g = Graph.complete(5)
        assert not verify_factor(g, CliqueFactor.build([(0, 1)], [2], 2), 2)
        assert not verify_factor(g, CliqueFactor.build([(0, 1), (2, 3)], [], 2), 2)
