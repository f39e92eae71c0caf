"""Exception hierarchy shared by every wellsep module."""
from typing import Any, Dict, Optional


class WellsepError(Exception):
    """Base exception for wellsep errors.

    ``context`` holds structured detail (violating vertex, witness sets, stuck clique)
    that the pipeline copies into its records.
    """

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "type": type(self).__name__,
            "message": self.message,
            "context": self.context,
        }


class ArgumentError(WellsepError, ValueError):
    """Raised when an operation receives invalid arguments."""
    pass


class EdgeListParseError(ArgumentError):
    """Raised when an edge-list file is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", {"line": line})
        self.line = line


class PreconditionError(WellsepError):
    """Raised when a documented precondition of an operation does not hold."""
    pass


class RegimeError(WellsepError):
    """Raised when an input is too large for an exact search."""
    pass


class StructuralError(WellsepError):
    """Raised when a structure (separation, partition) is malformed."""
    pass


class InconsistencyError(WellsepError):
    """Raised when a certificate is contradicted by the graph it certifies."""
    pass


class HostRegimeError(WellsepError):
    """Raised when the host violates the minimum-degree regime at reduced scale."""
    pass


class BalanceError(WellsepError):
    """Raised when distributing the exceptional cluster misses its balance target."""
    pass


class GenerationError(WellsepError):
    """Raised when generator parameters cannot meet the generator's promise."""
    pass


class EmbeddingFailedError(WellsepError):
    """Raised when the matching phase of the embedder finds no perfect matching."""

    def __init__(self, message: str, clique: int, hall_set: Any):
        super().__init__(message, {"clique": clique, "hall_set": sorted(hall_set)})
        self.clique = clique
        self.hall_set = frozenset(hall_set)
