"""alpha-separability: certificates, the bandwidth decomposition and separator search."""

from .separation import (
    BandwidthOrdering,
    Separation,
    SeparationVerdict,
    bandwidth_of,
    bandwidth_separator,
    check_structure,
    cuthill_mckee_ordering,
    find_separator,
    verify_separation,
)

__all__ = [
    "BandwidthOrdering",
    "Separation",
    "SeparationVerdict",
    "bandwidth_of",
    "bandwidth_separator",
    "check_structure",
    "cuthill_mckee_ordering",
    "find_separator",
    "verify_separation",
]
