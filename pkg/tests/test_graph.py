"""Tests for the graph core and the edge-list format."""

import networkx as nx
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.errors import ArgumentError, EdgeListParseError
from src.graph import (
    Graph,
    VertexSet,
    chromatic_upper,
    components,
    degree_into,
    density,
    edges_between,
    format_edge_list,
    max_degree,
    min_degree,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)


@st.composite
def small_graphs(draw, max_n=9):
    n = draw(st.integers(min_value=1, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    return Graph(n, chosen)


class TestGraph:
    """Test construction and accessors."""

    def test_edges_are_normalized(self):
        """Test that edges are stored with the smaller endpoint first."""
        g = Graph(3, [(2, 0), (1, 2)])
        assert g.edges == frozenset({(0, 2), (1, 2)})
        assert g.neighbors(2) == frozenset({0, 1})
        assert g.num_edges == 2

    def test_rejects_self_loop(self):
        """Test that a self-loop is an argument error."""
        with pytest.raises(ArgumentError):
            Graph(2, [(1, 1)])

    def test_rejects_out_of_range_endpoint(self):
        """Test that endpoints outside 0..n-1 are rejected."""
        with pytest.raises(ArgumentError):
            Graph(2, [(0, 2)])

    def test_invalid_vertex_lookup(self):
        """Test that neighbour lookup validates the vertex id."""
        with pytest.raises(ArgumentError):
            Graph.path(3).neighbors(5)

    def test_grid_numbering(self):
        """Test that grid vertex r*cols+c sits at row r, column c."""
        g = Graph.grid(2, 3)
        assert g.has_edge(0, 1)
        assert g.has_edge(0, 3)
        assert not g.has_edge(2, 3)
        assert max_degree(g) == 3

    def test_adjacency_matrix_is_symmetric_and_read_only(self):
        """Test the cached adjacency matrix."""
        g = Graph.cycle(5)
        matrix = g.adjacency_matrix()
        assert (matrix == matrix.T).all()
        assert matrix.sum() == 10
        assert not matrix.flags.writeable

    def test_without_edges(self):
        """Test deriving a graph with some edges removed."""
        g = Graph.complete(4).without_edges([(1, 0)])
        assert not g.has_edge(0, 1)
        assert g.num_edges == 5

    def test_degree_extremes_of_empty_graph(self):
        """Test that min/max degree of the order-0 graph are undefined."""
        with pytest.raises(ArgumentError):
            min_degree(Graph(0))

    def test_networkx_round_trip_relabels(self):
        """Test that networkx nodes are relabelled in sorted order."""
        g = Graph.from_networkx(nx.Graph([("b", "c"), ("a", "b")]))
        assert g.edges == frozenset({(0, 1), (1, 2)})


class TestVertexSets:
    """Test densities and vertex-set helpers."""

    def test_vertex_set_rejects_foreign_ids(self):
        """Test that a vertex set validates ids against n."""
        with pytest.raises(ArgumentError):
            VertexSet(frozenset({0, 4}), 3)

    def test_density_of_complete_bipartite(self):
        """Test d(X, Y) on K_{2,3}."""
        g = Graph.from_networkx(nx.complete_bipartite_graph(2, 3))
        assert density(g, {0, 1}, {2, 3, 4}) == 1.0
        assert edges_between(g, [0], [2, 3]) == 2
        assert degree_into(g, 0, VertexSet.of(g, [2, 3])) == 2

    def test_density_requires_disjoint_sets(self):
        """Test that overlapping sets are rejected."""
        g = Graph.complete(4)
        with pytest.raises(ArgumentError):
            density(g, {0, 1}, {1, 2})

    def test_density_requires_non_empty_sets(self):
        """Test that empty sets are rejected."""
        with pytest.raises(ArgumentError):
            density(Graph.complete(3), set(), {1})

    def test_components_after_removal(self):
        """Test that removing the middle of a path splits it."""
        parts = components(Graph.path(5), {2})
        assert [p.to_list() for p in parts] == [[0, 1], [3, 4]]

    @hsettings(max_examples=60, deadline=None)
    @given(small_graphs(), st.data())
    def test_components_match_networkx(self, g, data):
        """Test components against networkx on random graphs."""
        removed = data.draw(st.sets(st.integers(0, g.n - 1)))
        view = g.to_networkx().subgraph(v for v in g.vertices() if v not in removed)
        expected = sorted(sorted(c) for c in nx.connected_components(view))
        assert sorted(p.to_list() for p in components(g, removed)) == expected


class TestColoring:
    """Test chromatic upper bounds."""

    def test_odd_cycle_needs_three_colors(self):
        """Test the exact chromatic number of C_5."""
        coloring = chromatic_upper(Graph.cycle(5))
        assert coloring.k == 3
        assert coloring.exact
        assert coloring.is_proper(Graph.cycle(5))

    def test_grid_is_bipartite(self):
        """Test that a grid is 2-colored."""
        g = Graph.grid(4, 4)
        coloring = chromatic_upper(g)
        assert coloring.k == 2
        assert coloring.is_proper(g)

    def test_complete_graph(self):
        """Test that K_4 needs four colors."""
        assert chromatic_upper(Graph.complete(4)).k == 4

    def test_empty_graph(self):
        """Test the coloring of the graph without vertices."""
        coloring = chromatic_upper(Graph(0))
        assert coloring.k == 0
        assert coloring.classes() == []

    def test_above_cap_is_not_exact(self):
        """Test that DSATUR alone is used above the exact cap."""
        coloring = chromatic_upper(Graph.cycle(7), exact_cap=3)
        assert not coloring.exact
        assert coloring.is_proper(Graph.cycle(7))

    def test_classes_are_padded(self):
        """Test that classes() pads up to the requested count."""
        classes = chromatic_upper(Graph.path(3)).classes(4)
        assert len(classes) == 4
        assert classes[2] == frozenset() and classes[3] == frozenset()

    @hsettings(max_examples=60, deadline=None)
    @given(small_graphs(max_n=6))
    def test_exact_coloring_is_proper_and_optimal(self, g):
        """Test the exact coloring against a brute-force chromatic number."""
        coloring = chromatic_upper(g)
        assert coloring.is_proper(g)
        best = min(
            k
            for k in range(1, g.n + 1)
            if any(
                all(c[u] != c[v] for u, v in g.edges)
                for c in _assignments(g.n, k)
            )
        )
        assert coloring.k == best


def _assignments(n, k):
    if n == 0:
        yield ()
        return
    for rest in _assignments(n - 1, k):
        for c in range(k):
            yield rest + (c,)


class TestEdgeList:
    """Test the edge-list format."""

    def test_parse(self):
        """Test parsing a small file with comments and a blank line."""
        g = parse_edge_list("# triangle minus an edge\n3 2\n0 1\n\n1 2\n")
        assert g.n == 3
        assert g.edges == frozenset({(0, 1), (1, 2)})

    def test_duplicate_edge_reports_line(self):
        """Test that a duplicate edge is rejected with its line number."""
        with pytest.raises(EdgeListParseError) as exc_info:
            parse_edge_list("3 2\n0 1\n0 1\n")
        assert exc_info.value.line == 3

    def test_reversed_endpoints_are_rejected(self):
        """Test that an edge written as u > v is refused with its line number."""
        with pytest.raises(EdgeListParseError) as exc_info:
            parse_edge_list("3 2\n0 1\n2 1\n")
        assert exc_info.value.line == 3
        assert "u < v" in str(exc_info.value)

    def test_header_count_mismatch(self):
        """Test that the announced edge count must match."""
        with pytest.raises(EdgeListParseError):
            parse_edge_list("3 3\n0 1\n1 2\n")

    def test_missing_header(self):
        """Test that an empty file has no header."""
        with pytest.raises(EdgeListParseError):
            parse_edge_list("")

    def test_non_integer_field(self):
        """Test that non-integer fields are rejected."""
        with pytest.raises(EdgeListParseError):
            parse_edge_list("2 1\n0 x\n")

    def test_format_is_sorted(self):
        """Test the canonical output."""
        assert format_edge_list(Graph(3, [(2, 1), (0, 1)])) == "3 2\n0 1\n1 2\n"

    def test_write_then_read(self, tmp_path):
        """Test writing a graph atomically and reading it back."""
        g = Graph.grid(3, 3)
        path = write_edge_list(g, tmp_path / "sub" / "grid.txt")
        assert not (tmp_path / "sub" / "grid.txt.tmp").exists()
        assert read_edge_list(path) == g
