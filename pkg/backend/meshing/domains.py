"""
Exhaustion Domains Module
Convex geodesic polygons D_n spanned by the points at hyperbolic distance n
from a basepoint along the rays to the ideal vertices, and nested uniform
truncation schemes.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import (
    DiskPoint,
    busemann_array,
    convex_polygon_contains,
    distance_array,
    geodesic_points,
    ray_point,
    to_klein,
)
from backend.polygons.ideal_polygon import IdealPolygon, TruncationScheme

logger = logging.getLogger(__name__)

RADIUS_TOL = 1e-10


class NonConvex(ScherkLabError, ValueError):
    """Raised when an exhaustion polygon has an interior angle >= pi."""
    pass


class NotNested(ScherkLabError, ValueError):
    """Raised when an inner domain is not strictly inside an outer one."""
    pass


class NotDecreasing(ScherkLabError, ValueError):
    """Raised when truncation levels are not strictly decreasing."""
    pass


def default_basepoint(poly: IdealPolygon) -> DiskPoint:
    """Disk point over the Klein-model centroid of the ideal vertices."""
    return DiskPoint.from_complex(poly.klein_centroid())


def _klein_turns(klein: np.ndarray) -> np.ndarray:
    """Cross products of consecutive sides; all positive for a strictly convex ccw polygon."""
    sides = np.roll(klein, -1) - klein
    return (np.conj(sides) * np.roll(sides, -1)).imag


@dataclass(frozen=True)
class ExhaustionDomain:
    """The convex geodesic polygon D_n of an ideal polygon."""

    polygon: IdealPolygon
    basepoint: DiskPoint
    n: float
    corner_points: tuple[complex, ...]

    @property
    def tag(self) -> str:
        return f"gamma{self.n:g}"

    @property
    def corners(self) -> np.ndarray:
        return np.array(self.corner_points, dtype=complex)

    @property
    def klein_corners(self) -> np.ndarray:
        return to_klein(self.corners)

    def sides(self) -> list[tuple[complex, complex]]:
        c = self.corner_points
        return [(c[i], c[(i + 1) % len(c)]) for i in range(len(c))]

    def boundary_length(self) -> float:
        c = self.corners
        return float(np.sum(distance_array(c, np.roll(c, -1))))

    def contains(self, z, margin: float = 0.0) -> np.ndarray:
        """Strict containment of disk points (Klein-model convexity test)."""
        return convex_polygon_contains(self.klein_corners, to_klein(np.asarray(z, dtype=complex)), margin)

    def boundary_samples(self, per_side: int = 16) -> np.ndarray:
        pts = [geodesic_points(p, q, per_side)[:-1] for p, q in self.sides()]
        return np.concatenate(pts)

    def interior_angles_ok(self) -> bool:
        return bool(np.all(_klein_turns(self.klein_corners) > 0.0))


def build_exhaustion(poly: IdealPolygon, basepoint: DiskPoint, n: float) -> ExhaustionDomain:
    """
    Build D_n: corners at hyperbolic distance n from basepoint toward each vertex.

    Args:
        poly: Ideal polygon
        basepoint: Point inside the polygon
        n: Hyperbolic radius, positive

    Returns:
        ExhaustionDomain

    Raises:
        ValueError: If n <= 0, the basepoint is outside the polygon or a corner misses radius n
        NonConvex: If a corner angle check fails
    """
    if not n > 0:
        raise ValueError(f"exhaustion radius must be positive, got {n}")
    p = basepoint.z
    if not convex_polygon_contains(poly.ideal_points, to_klein(p))[0]:
        raise ValueError(f"basepoint ({basepoint.x}, {basepoint.y}) is not inside the ideal polygon")

    corners = tuple(complex(ray_point(p, xi, n)) for xi in poly.ideal_points)
    domain = ExhaustionDomain(poly, basepoint, float(n), corners)

    radii = distance_array(p, domain.corners)
    if np.max(np.abs(radii - n)) > RADIUS_TOL * max(1.0, n):
        raise ValueError(f"D_{n:g}: corner radii deviate from n by {np.max(np.abs(radii - n)):.3e}")
    if not domain.interior_angles_ok():
        raise NonConvex(f"exhaustion polygon D_{n:g} has an interior angle >= pi")
    logger.debug(f"Built D_{n:g} with {len(corners)} corners, perimeter {domain.boundary_length():.6f}")
    return domain


def check_nested(inner: ExhaustionDomain, outer: ExhaustionDomain):
    """
    Raises:
        NotNested: Unless inner lies strictly inside outer around the same basepoint
    """
    if inner.basepoint != outer.basepoint:
        raise NotNested("nested exhaustion domains must share their basepoint")
    if not inner.n < outer.n:
        raise NotNested(f"inner radius {inner.n:g} must be smaller than outer radius {outer.n:g}")
    if not np.all(outer.contains(inner.corners)):
        raise NotNested(f"D_{inner.n:g} is not strictly contained in D_{outer.n:g}")


def nested_truncations(poly: IdealPolygon, levels: Sequence[float]) -> list[TruncationScheme]:
    """
    Uniform truncation schemes for strictly decreasing levels; their horoballs are nested.

    Raises:
        NotDecreasing: If levels are not strictly decreasing (or empty)
    """
    levels = [float(s) for s in levels]
    if not levels:
        raise NotDecreasing("at least one truncation level is required")
    for a, b in zip(levels, levels[1:]):
        if not b < a:
            raise NotDecreasing(f"truncation levels must be strictly decreasing, {b} follows {a}")
    return [TruncationScheme.uniform(poly, s) for s in levels]


def truncation_covers(poly: IdealPolygon, trunc: TruncationScheme, domain: ExhaustionDomain,
                      per_side: int = 32) -> bool:
    """True when D_n avoids every horoball of trunc (sampled along its convex boundary)."""
    samples = domain.boundary_samples(per_side)
    for xi, level in zip(poly.ideal_points, trunc.levels):
        if np.any(busemann_array(xi, samples) <= level):
            return False
    return True
