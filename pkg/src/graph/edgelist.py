"""Edge-list text format: a header line ``n m`` followed by ``m`` lines ``u v``."""
import logging
from pathlib import Path
from typing import List, Set, Tuple, Union

from src.errors import EdgeListParseError
from src.graph.core import Graph

logger = logging.getLogger(__name__)


def parse_edge_list(text: str) -> Graph:
    """Parse the edge-list format, rejecting duplicates and self-loops.

    Blank lines and lines starting with ``#`` are ignored. Every edge line must list
    its endpoints as ``u < v``.
    """
    header = None
    seen: Set[Tuple[int, int]] = set()
    edges: List[Tuple[int, int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise EdgeListParseError(f"expected two integers, got {line!r}", line_no)
        try:
            a, b = int(fields[0]), int(fields[1])
        except ValueError:
            raise EdgeListParseError(f"non-integer field in {line!r}", line_no)

        if header is None:
            if a < 0 or b < 0:
                raise EdgeListParseError("header counts must be non-negative", line_no)
            header = (a, b)
            continue

        n = header[0]
        if not (0 <= a < n and 0 <= b < n):
            raise EdgeListParseError(f"edge ({a}, {b}) outside 0..{n - 1}", line_no)
        if a == b:
            raise EdgeListParseError(f"self-loop at vertex {a}", line_no)
        if a > b:
            raise EdgeListParseError(f"edge ({a}, {b}) must be written with u < v", line_no)
        edge = (a, b)
        if edge in seen:
            raise EdgeListParseError(f"duplicate edge {edge}", line_no)
        seen.add(edge)
        edges.append(edge)

    if header is None:
        raise EdgeListParseError("missing header line 'n m'", 1)
    if len(edges) != header[1]:
        raise EdgeListParseError(
            f"header announces {header[1]} edges but {len(edges)} were listed",
            len(text.splitlines()),
        )
    return Graph(header[0], edges)


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.num_edges}"]
    lines.extend(f"{u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"


def read_edge_list(path: Union[str, Path]) -> Graph:
    path = Path(path)
    logger.debug(f"Reading edge list from {path}")
    return parse_edge_list(path.read_text(encoding="utf-8"))


def write_edge_list(g: Graph, path: Union[str, Path]) -> Path:
    """Write ``g`` atomically: a temporary sibling is written, then moved into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    temp_file.write_text(format_edge_list(g), encoding="utf-8")
    temp_file.replace(path)
    logger.debug(f"Wrote {g!r} to {path}")
    return path
