"""Embedding H into the balanced cluster structure, checking it, and the exact oracle."""

from .brute_force import brute_force_embed
from .embedder import Embedding, EmbeddingVerdict, embed_cliquewise, respects_assignment, verify_embedding
from .restrictions import RestrictionSet, build_restrictions, cross_clique_edges, crowded_clusters

__all__ = [
    "Embedding",
    "EmbeddingVerdict",
    "RestrictionSet",
    "brute_force_embed",
    "build_restrictions",
    "cross_clique_edges",
    "crowded_clusters",
    "embed_cliquewise",
    "respects_assignment",
    "verify_embedding",
]
