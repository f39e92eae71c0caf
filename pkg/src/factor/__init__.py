"""Clique factors of the reduced graph."""

from .clique_factor import CliqueFactor, find_kfactor, verify_factor

__all__ = ["CliqueFactor", "find_kfactor", "verify_factor"]
