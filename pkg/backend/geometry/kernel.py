"""
Hyperbolic Kernel Module
Closed-form geometry of the curvature -1 Poincare disk: distances, geodesics,
Busemann functions, horocycles and horocycle-truncated lengths.

Points are handled as complex numbers internally; the public value types
(DiskPoint, IdealPoint, Geodesic, Horocycle) wrap them with their invariants.
Busemann functions are normalized to vanish at the disk origin.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from backend.exceptions import ScherkLabError

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12

ArrayLike = Union[complex, np.ndarray]


class CenterNotEndpoint(ScherkLabError, ValueError):
    """Raised when a horocycle is not centered at an endpoint of a geodesic."""
    pass


def normalize_angle(theta: float) -> float:
    """Map an angle in radians to [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


def angular_distance(a: float, b: float) -> float:
    """Distance between two angles along the circle, in [0, pi]."""
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _logistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class DiskPoint:
    """Interior point of the unit disk model."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"DiskPoint coordinates must be finite, got ({self.x}, {self.y})")
        if self.x * self.x + self.y * self.y >= 1.0:
            raise ValueError(f"DiskPoint must lie in the open unit disk, got ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        return cls(float(z.real), float(z.imag))

    @classmethod
    def origin(cls) -> "DiskPoint":
        return cls(0.0, 0.0)


@dataclass(frozen=True, eq=False)
class IdealPoint:
    """
    Point at infinity, stored as an angle in [0, 2*pi).

    Two ideal points compare equal when their angles agree within ANGLE_TOL.
    Tolerance-based equality is not transitive, so ideal points are unhashable.
    """

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"IdealPoint angle must be finite, got {self.theta}")
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def __eq__(self, other):
        if not isinstance(other, IdealPoint):
            return NotImplemented
        return angular_distance(self.theta, other.theta) <= ANGLE_TOL

    __hash__ = None

    @property
    def z(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)

    @classmethod
    def from_degrees(cls, degrees: float) -> "IdealPoint":
        return cls(math.radians(degrees))


@dataclass(frozen=True)
class Geodesic:
    """Oriented complete geodesic between two distinct ideal points."""

    start: IdealPoint
    end: IdealPoint

    def __post_init__(self):
        if self.start == self.end:
            raise ValueError(f"Geodesic endpoints must be distinct, got {self.start.degrees} deg twice")

    @property
    def separation(self) -> float:
        """Angular separation of the endpoints, in (0, pi]."""
        return angular_distance(self.start.theta, self.end.theta)

    @property
    def chord(self) -> float:
        """Euclidean distance between the endpoints."""
        return 2.0 * math.sin(0.5 * self.separation)

    def reversed(self) -> "Geodesic":
        return Geodesic(self.end, self.start)

    def has_endpoint(self, xi: IdealPoint) -> bool:
        return xi == self.start or xi == self.end

    def closest_point_to_origin(self) -> complex:
        """Point of the geodesic nearest to the origin (where both Busemann values agree)."""
        d = (self.end.theta - self.start.theta) % TWO_PI
        if d <= math.pi:
            mid = self.start.theta + 0.5 * d
        else:
            mid = self.end.theta + 0.5 * (TWO_PI - d)
        r = math.tan(0.25 * (math.pi - self.separation))
        return r * complex(math.cos(mid), math.sin(mid))


@dataclass(frozen=True)
class Horocycle:
    """Horocycle at an ideal point, located by its Busemann level."""

    center: IdealPoint
    level: float

    def shrink(self, delta: float) -> "Horocycle":
        """Lower the level by delta; the horoball shrinks toward its center."""
        return Horocycle(self.center, self.level - delta)

    @property
    def euclidean_center(self) -> complex:
        return _logistic(-self.level) * self.center.z

    @property
    def euclidean_radius(self) -> float:
        return _logistic(self.level)

    def contains(self, p: DiskPoint) -> bool:
        """True when p lies in the closed horoball {B <= level}."""
        return busemann(self.center, p) <= self.level


# ---------------------------------------------------------------------------
# Complex-number primitives (vectorized over numpy arrays)
# ---------------------------------------------------------------------------

def conformal_factor(z: ArrayLike) -> ArrayLike:
    """Conformal factor 2 / (1 - |z|^2) of the disk metric."""
    return 2.0 / (1.0 - np.abs(z) ** 2)


def to_klein(z: ArrayLike) -> ArrayLike:
    """Map disk-model points to the Klein model, where geodesics are straight."""
    return 2.0 * z / (1.0 + np.abs(z) ** 2)


def from_klein(k: ArrayLike) -> ArrayLike:
    return k / (1.0 + np.sqrt(1.0 - np.abs(k) ** 2))


def mobius_to_origin(p: complex, z: ArrayLike) -> ArrayLike:
    """Disk isometry sending p to the origin."""
    return (z - p) / (1.0 - np.conj(p) * z)


def mobius_from_origin(p: complex, w: ArrayLike) -> ArrayLike:
    """Inverse of mobius_to_origin: sends the origin to p."""
    return (w + p) / (1.0 + np.conj(p) * w)


def distance_array(z1: ArrayLike, z2: ArrayLike) -> ArrayLike:
    """Hyperbolic distance between disk points, elementwise."""
    num = np.abs(z1 - z2)
    den = np.sqrt((1.0 - np.abs(z1) ** 2) * (1.0 - np.abs(z2) ** 2))
    return 2.0 * np.arcsinh(num / den)


def busemann_array(xi: complex, z: ArrayLike) -> ArrayLike:
    """Busemann function of the ideal point xi (unit complex), zero at the origin."""
    return np.log(np.abs(xi - z) ** 2) - np.log(1.0 - np.abs(z) ** 2)


def ray_point(p: complex, xi: complex, d: ArrayLike) -> ArrayLike:
    """Point(s) at hyperbolic distance d from p on the ray toward the ideal point xi."""
    w = mobius_to_origin(p, xi)
    w = w / abs(w)
    return mobius_from_origin(p, np.tanh(0.5 * np.asarray(d)) * w)


def geodesic_points(p: complex, q: complex, count: int) -> np.ndarray:
    """count + 1 points on the segment [p, q], equally spaced in hyperbolic length."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    w = mobius_to_origin(p, q)
    r_end = abs(w)
    pts = np.empty(count + 1, dtype=complex)
    pts[0] = p
    pts[-1] = q
    if count > 1:
        length = 2.0 * math.atanh(r_end)
        frac = np.arange(1, count) / count
        pts[1:-1] = mobius_from_origin(p, np.tanh(0.5 * frac * length) * (w / r_end))
    return pts


def geodesic_tangent_angle(p: complex, q: complex) -> float:
    """Direction at p (model angle) of the geodesic from p toward q."""
    w = mobius_to_origin(p, q)
    return math.atan2(w.imag, w.real)


def polyline_length(points: np.ndarray) -> float:
    """Hyperbolic length of a chain of geodesic segments through the given points."""
    if len(points) < 2:
        return 0.0
    return float(np.sum(distance_array(points[:-1], points[1:])))


def distance_to_geodesic(z: ArrayLike, g: Geodesic) -> ArrayLike:
    """Hyperbolic distance from disk points to the complete geodesic g."""
    e1 = mobius_to_origin(z, g.start.z)
    e2 = mobius_to_origin(z, g.end.z)
    sep = np.abs(np.angle(e1 / e2))
    r = np.tan(0.25 * (np.pi - sep))
    return 2.0 * np.arctanh(np.clip(r, 0.0, 1.0 - 1e-16))


def convex_polygon_contains(vertices: np.ndarray, z: ArrayLike, margin: float = 0.0) -> np.ndarray:
    """
    Containment in a Euclidean-convex polygon given by counter-clockwise vertices.

    Args:
        vertices: complex array of polygon vertices in counter-clockwise order
        z: complex query points
        margin: required signed cross-product clearance from every side

    Returns:
        Boolean array, True where the point is strictly inside
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    inside = np.ones(z.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        edge = vertices[(i + 1) % n] - a
        cross = (np.conj(edge) * (z - a)).imag
        inside &= cross > margin
    return inside


# ---------------------------------------------------------------------------
# Horocycle arcs
# ---------------------------------------------------------------------------

def _horocycle_phase(h: Horocycle, z: ArrayLike) -> ArrayLike:
    """Angle around the horocycle's Euclidean center, measured from the tangency point."""
    rel = (np.asarray(z) - h.euclidean_center) / (h.euclidean_radius * h.center.z)
    return np.mod(np.angle(rel), TWO_PI)


def _horocycle_scale(h: Horocycle) -> float:
    return 1.0 + math.exp(h.level)


def horocycle_arc_length(h: Horocycle, p: complex, q: complex) -> float:
    """Hyperbolic length of the horocyclic arc between p and q avoiding the tangency point."""
    phi_p, phi_q = _horocycle_phase(h, np.array([p, q]))
    scale = _horocycle_scale(h)
    return float(scale * abs(1.0 / math.tan(0.5 * phi_p) - 1.0 / math.tan(0.5 * phi_q)))


def horocycle_arc_points(h: Horocycle, p: complex, q: complex, count: int) -> np.ndarray:
    """count + 1 points from p to q along the horocycle, equally spaced in arc length."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    phi_p, phi_q = _horocycle_phase(h, np.array([p, q]))
    scale = _horocycle_scale(h)
    sigma_p = -scale / math.tan(0.5 * phi_p)
    sigma_q = -scale / math.tan(0.5 * phi_q)
    sigma = np.linspace(sigma_p, sigma_q, count + 1)
    phi = 2.0 * np.arctan2(1.0, -sigma / scale)
    pts = h.euclidean_center + h.euclidean_radius * h.center.z * np.exp(1j * phi)
    pts[0] = p
    pts[-1] = q
    return pts


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def hyp_distance(p: DiskPoint, q: DiskPoint) -> float:
    """Hyperbolic distance between two disk points."""
    return float(distance_array(p.z, q.z))


def busemann(xi: IdealPoint, p: DiskPoint) -> float:
    """Busemann function B_xi(p), normalized so that B_xi(origin) = 0."""
    return float(busemann_array(xi.z, p.z))


def point_on_ray(p: DiskPoint, xi: IdealPoint, d: float) -> DiskPoint:
    """Point at hyperbolic distance d >= 0 from p on the geodesic ray toward xi."""
    if d < 0.0:
        raise ValueError(f"distance along a ray must be >= 0, got {d}")
    if d == 0.0:
        return p
    return DiskPoint.from_complex(complex(ray_point(p.z, xi.z, d)))


def _horocycle_order(g: Geodesic, h1: Horocycle, h2: Horocycle) -> tuple[float, float]:
    """Levels of the horocycles at (g.start, g.end), whatever order they were given in."""
    if h1.center == g.start and h2.center == g.end:
        return h1.level, h2.level
    if h1.center == g.end and h2.center == g.start:
        return h2.level, h1.level
    raise CenterNotEndpoint(
        f"horocycles centered at {h1.center.degrees:.9f} and {h2.center.degrees:.9f} deg "
        f"do not sit at the two endpoints {g.start.degrees:.9f}, {g.end.degrees:.9f} deg"
    )


def geodesic_foot_on_horocycle(g: Geodesic, h: Horocycle) -> DiskPoint:
    """
    Intersection of a geodesic with a horocycle centered at one of its endpoints.

    Along g the sum of the two endpoint Busemann functions is the constant
    2 log(chord / 2); the foot sits at signed distance (that constant / 2 - level)
    from the point of g nearest the origin, toward the horocycle's center.

    Raises:
        CenterNotEndpoint: If h is not centered at an endpoint of g
    """
    if h.center == g.start:
        target, other = g.start, g.end
    elif h.center == g.end:
        target, other = g.end, g.start
    else:
        raise CenterNotEndpoint(
            f"horocycle center {h.center.degrees:.9f} deg is not an endpoint of the geodesic"
        )
    half_sum = math.log(0.5 * g.chord)
    t = half_sum - h.level
    m = g.closest_point_to_origin()
    if t >= 0.0:
        return DiskPoint.from_complex(complex(ray_point(m, target.z, t)))
    return DiskPoint.from_complex(complex(ray_point(m, other.z, -t)))


def truncated_length(g: Geodesic, h1: Horocycle, h2: Horocycle) -> float:
    """
    Signed length of g outside the horoballs of h1 and h2.

    Positive when the horoballs are disjoint, negative when they overlap.

    Raises:
        CenterNotEndpoint: If the horocycles are not centered at both endpoints
    """
    s_start, s_end = _horocycle_order(g, h1, h2)
    return 2.0 * math.log(0.5 * g.chord) - s_start - s_end
