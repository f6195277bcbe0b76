"""
Polygon Spec Loader Module
Parses the line-oriented polygon spec format (curvature / vertex / first_edge
directives, '#' comments) into an IdealPolygon.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from backend.exceptions import ScherkLabError
from backend.polygons.ideal_polygon import EdgeLabel, IdealPolygon, InvalidPolygon

logger = logging.getLogger(__name__)

DIRECTIVES = ("curvature", "vertex", "first_edge")


class PolygonSpecError(ScherkLabError, ValueError):
    """Custom exception for polygon spec parse errors."""

    def __init__(self, message: str, line_number: Optional[int] = None, source: str = "<spec>"):
        self.line_number = line_number
        self.source = source
        where = f"{source}:{line_number}" if line_number is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class PolygonSpec:
    """A parsed polygon spec: the polygon plus the curvature scale a (curvature -a^2)."""

    polygon: IdealPolygon
    curvature: float = 1.0

    def to_text(self) -> str:
        lines = []
        if self.curvature != 1.0:
            lines.append(f"curvature {self.curvature!r}")
        lines.extend(f"vertex {v.degrees!r}" for v in self.polygon.vertices)
        lines.append(f"first_edge {self.polygon.first_edge_label.value}")
        return "\n".join(lines) + "\n"


def _number(token: str, line_number: int, source: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise PolygonSpecError(f"{what} must be a number, got {token!r}", line_number, source) from None
    if not math.isfinite(value):
        raise PolygonSpecError(f"{what} must be finite, got {token!r}", line_number, source)
    return value


def parse_polygon_spec(text: str, source: str = "<spec>") -> PolygonSpec:
    """
    Parse polygon spec text.

    Args:
        text: Spec file contents
        source: Name used in error messages

    Returns:
        PolygonSpec

    Raises:
        PolygonSpecError: On any syntax or polygon invariant violation
    """
    curvature = None
    first_edge = None
    angles: list[float] = []
    last_vertex_line = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0].lower(), tokens[1:]
        if directive not in DIRECTIVES:
            raise PolygonSpecError(
                f"unknown directive {tokens[0]!r}; expected one of {', '.join(DIRECTIVES)}",
                line_number, source,
            )
        if len(args) != 1:
            raise PolygonSpecError(f"'{directive}' takes exactly one argument", line_number, source)

        if directive == "curvature":
            if curvature is not None:
                raise PolygonSpecError("duplicate 'curvature' directive", line_number, source)
            curvature = _number(args[0], line_number, source, "curvature")
            if curvature <= 0:
                raise PolygonSpecError(f"curvature scale must be positive, got {curvature}", line_number, source)
        elif directive == "first_edge":
            if first_edge is not None:
                raise PolygonSpecError("duplicate 'first_edge' directive", line_number, source)
            try:
                first_edge = EdgeLabel.parse(args[0])
            except InvalidPolygon as e:
                raise PolygonSpecError(str(e), line_number, source) from None
        else:
            angle = _number(args[0], line_number, source, "vertex angle")
            if not 0.0 <= angle < 360.0:
                raise PolygonSpecError(f"vertex angle must lie in [0, 360), got {angle}", line_number, source)
            if angles and angle <= angles[-1]:
                raise PolygonSpecError(
                    f"vertex angles must be strictly increasing, {angle} follows {angles[-1]}",
                    line_number, source,
                )
            angles.append(angle)
            last_vertex_line = line_number

    if len(angles) < 4 or len(angles) % 2 != 0:
        raise PolygonSpecError(
            f"an ideal polygon needs an even vertex count >= 4, got {len(angles)} vertices",
            last_vertex_line, source,
        )
    try:
        polygon = IdealPolygon.from_degrees(angles, first_edge or EdgeLabel.ALPHA)
    except InvalidPolygon as e:
        raise PolygonSpecError(str(e), last_vertex_line, source) from None

    logger.debug(f"Parsed {source}: {len(angles)} vertices, curvature scale {curvature or 1.0}")
    return PolygonSpec(polygon=polygon, curvature=curvature if curvature is not None else 1.0)


def load_polygon_spec(file_path: "str | Path") -> PolygonSpec:
    """
    Read and parse a polygon spec file.

    Raises:
        PolygonSpecError: If the file is missing or malformed
    """
    path = Path(file_path)
    if not path.is_file():
        logger.error(f"Polygon spec not found: {path}")
        raise PolygonSpecError("file not found", None, str(path))
    logger.info(f"Loading polygon spec: {path}")
    return parse_polygon_spec(path.read_text(encoding="utf-8"), source=str(path))
