"""
Ideal Polygon Module
Ideal polygons with alternating alpha/beta edge labels, horocycle truncation
schemes and the truncated length functionals a(G), b(G) built on them.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import (
    ANGLE_TOL,
    Geodesic,
    Horocycle,
    IdealPoint,
    angular_distance,
    to_klein,
    from_klein,
    truncated_length,
)

logger = logging.getLogger(__name__)


class InvalidPolygon(ScherkLabError, ValueError):
    """Raised when vertices or labels violate the ideal polygon invariants."""
    pass


class DisjointnessViolated(ScherkLabError, ValueError):
    """Raised when a truncation scheme's horoballs are not pairwise disjoint."""

    def __init__(self, message: str, pairs: Sequence[tuple[int, int]] = ()):
        super().__init__(message)
        self.pairs = list(pairs)


class EdgeLabel(Enum):
    """Boundary label of an edge: alpha sides carry +inf, beta sides -inf."""
    ALPHA = "alpha"
    BETA = "beta"

    def opposite(self) -> "EdgeLabel":
        return EdgeLabel.BETA if self is EdgeLabel.ALPHA else EdgeLabel.ALPHA

    @classmethod
    def parse(cls, value: "str | EdgeLabel") -> "EdgeLabel":
        if isinstance(value, EdgeLabel):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidPolygon(f"edge label must be 'alpha' or 'beta', got {value!r}") from None


@dataclass(frozen=True)
class IdealPolygon:
    """
    Ideal polygon with 2k vertices at infinity, ordered by increasing angle.

    Edge i joins vertex i to vertex i + 1 (cyclically); labels alternate starting
    from first_edge_label.
    """

    vertices: tuple[IdealPoint, ...]
    first_edge_label: EdgeLabel = EdgeLabel.ALPHA

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "first_edge_label", EdgeLabel.parse(self.first_edge_label))
        n = len(self.vertices)
        if n < 4 or n % 2 != 0:
            raise InvalidPolygon(f"an ideal polygon needs an even vertex count >= 4, got {n}")
        thetas = [v.theta for v in self.vertices]
        for i in range(n - 1):
            if not thetas[i] < thetas[i + 1]:
                raise InvalidPolygon(
                    f"vertex angles must be strictly increasing in [0, 360): "
                    f"vertex {i} at {math.degrees(thetas[i]):.9g} deg, "
                    f"vertex {i + 1} at {math.degrees(thetas[i + 1]):.9g} deg"
                )
        for i in range(n):
            j = (i + 1) % n
            if angular_distance(thetas[i], thetas[j]) <= ANGLE_TOL:
                raise InvalidPolygon(f"vertices {i} and {j} coincide")

    @classmethod
    def from_degrees(cls, angles: Sequence[float], first_edge: "str | EdgeLabel" = "alpha") -> "IdealPolygon":
        return cls(tuple(IdealPoint.from_degrees(a) for a in angles), EdgeLabel.parse(first_edge))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def k(self) -> int:
        return len(self.vertices) // 2

    @property
    def ideal_points(self) -> np.ndarray:
        return np.array([v.z for v in self.vertices])

    def edge_label(self, i: int) -> EdgeLabel:
        i %= self.n_vertices
        return self.first_edge_label if i % 2 == 0 else self.first_edge_label.opposite()

    def edge_tag(self, i: int) -> str:
        """Mesh tag of boundary edge i: alpha<j> / beta<j>, j counted from 1 per label."""
        return f"{self.edge_label(i).value}{i // 2 + 1}"

    def geodesic(self, i: int, j: int) -> Geodesic:
        return Geodesic(self.vertices[i % self.n_vertices], self.vertices[j % self.n_vertices])

    def edges(self) -> list[tuple[int, int, EdgeLabel]]:
        n = self.n_vertices
        return [(i, (i + 1) % n, self.edge_label(i)) for i in range(n)]

    def flipped(self) -> "IdealPolygon":
        """Same vertices with alpha and beta exchanged (the polygon of the graph of -u)."""
        return IdealPolygon(self.vertices, self.first_edge_label.opposite())

    def klein_centroid(self) -> complex:
        """Disk point whose Klein image is the centroid of the vertices; always inside."""
        return complex(from_klein(np.mean(to_klein(self.ideal_points))))

    def to_dict(self) -> dict:
        return {
            "vertices_deg": [v.degrees for v in self.vertices],
            "first_edge": self.first_edge_label.value,
        }


@dataclass(frozen=True)
class TruncationScheme:
    """One Busemann level per polygon vertex; the horoball at vertex i is {B_i <= level_i}."""

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(s) for s in self.levels)
        if not all(math.isfinite(s) for s in levels):
            raise ValueError(f"truncation levels must be finite, got {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def uniform(cls, poly: IdealPolygon, level: float) -> "TruncationScheme":
        return cls(tuple([float(level)] * poly.n_vertices))

    def shifted(self, delta: float) -> "TruncationScheme":
        """Shift every level by delta (negative delta deepens the truncation)."""
        return TruncationScheme(tuple(s + delta for s in self.levels))

    def with_level(self, i: int, level: float) -> "TruncationScheme":
        levels = list(self.levels)
        levels[i] = float(level)
        return TruncationScheme(tuple(levels))

    def horocycle(self, poly: IdealPolygon, i: int) -> Horocycle:
        return Horocycle(poly.vertices[i], self.levels[i])

    @property
    def is_uniform(self) -> bool:
        return max(self.levels) - min(self.levels) == 0.0


def _check_sizes(poly: IdealPolygon, trunc: TruncationScheme):
    if len(trunc.levels) != poly.n_vertices:
        raise ValueError(
            f"truncation has {len(trunc.levels)} levels for a polygon with {poly.n_vertices} vertices"
        )


def chord_length(poly: IdealPolygon, trunc: TruncationScheme, i: int, j: int) -> float:
    """Signed truncated length of the geodesic joining vertices i and j."""
    return truncated_length(poly.geodesic(i, j), trunc.horocycle(poly, i), trunc.horocycle(poly, j))


def overlapping_pairs(poly: IdealPolygon, trunc: TruncationScheme) -> list[tuple[int, int]]:
    """Vertex pairs whose horoballs meet (truncated length <= 0)."""
    _check_sizes(poly, trunc)
    n = poly.n_vertices
    return [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if chord_length(poly, trunc, i, j) <= 0.0
    ]


def is_valid_truncation(poly: IdealPolygon, trunc: TruncationScheme) -> bool:
    return not overlapping_pairs(poly, trunc)


def validate_truncation(poly: IdealPolygon, trunc: TruncationScheme):
    """
    Check that all horoballs of trunc are pairwise disjoint.

    Raises:
        DisjointnessViolated: Listing the overlapping vertex pairs
    """
    pairs = overlapping_pairs(poly, trunc)
    if pairs:
        raise DisjointnessViolated(
            f"horoballs overlap for vertex pairs {pairs} at levels {list(trunc.levels)}",
            pairs,
        )


def edge_lengths(poly: IdealPolygon, trunc: TruncationScheme) -> list[tuple[EdgeLabel, float]]:
    """
    Truncated lengths of the boundary edges, in edge order.

    Raises:
        DisjointnessViolated: If trunc is not valid for poly
    """
    validate_truncation(poly, trunc)
    return [(label, chord_length(poly, trunc, i, j)) for i, j, label in poly.edges()]


def _signed_balance(poly: IdealPolygon, trunc: TruncationScheme) -> float:
    total = 0.0
    for i, j, label in poly.edges():
        length = chord_length(poly, trunc, i, j)
        total += length if label is EdgeLabel.ALPHA else -length
    return total


def balance(poly: IdealPolygon, trunc: TruncationScheme) -> float:
    """
    a(G) - b(G) for the given truncation.

    Each vertex touches one alpha and one beta edge, so level shifts cancel and the
    value does not depend on trunc.
    """
    validate_truncation(poly, trunc)
    return _signed_balance(poly, trunc)


def intrinsic_balance(poly: IdealPolygon) -> float:
    """Truncation-free balance: the same sum evaluated with all levels at 0, signed lengths allowed."""
    return _signed_balance(poly, TruncationScheme.uniform(poly, 0.0))


def perimeter(poly: IdealPolygon, trunc: TruncationScheme) -> float:
    return sum(length for _, length in edge_lengths(poly, trunc))
