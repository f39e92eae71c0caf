"""Simple graphs, vertex sets and the quantities every later stage consumes."""

from .core import (
    Coloring,
    Graph,
    VertexSet,
    VertexSetLike,
    chromatic_upper,
    components,
    degree_into,
    density,
    edges_between,
    max_degree,
    members_of,
    min_degree,
)
from .edgelist import format_edge_list, parse_edge_list, read_edge_list, write_edge_list

__all__ = [
    "Coloring",
    "Graph",
    "VertexSet",
    "VertexSetLike",
    "chromatic_upper",
    "components",
    "degree_into",
    "density",
    "edges_between",
    "format_edge_list",
    "max_degree",
    "members_of",
    "min_degree",
    "parse_edge_list",
    "read_edge_list",
    "write_edge_list",
]
