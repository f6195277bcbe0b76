"""Closed-form kernel formulas against numerical oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from backend.geometry.kernel import (
    CenterNotEndpoint,
    DiskPoint,
    Geodesic,
    Horocycle,
    IdealPoint,
    busemann,
    busemann_array,
    conformal_factor,
    distance_to_geodesic,
    from_klein,
    geodesic_foot_on_horocycle,
    geodesic_points,
    horocycle_arc_length,
    horocycle_arc_points,
    hyp_distance,
    mobius_to_origin,
    point_on_ray,
    ray_point,
    to_klein,
    truncated_length,
)

CASES = 1000


def _random_disk_points(rng, count, r_max=0.95):
    r = r_max * np.sqrt(rng.uniform(0.0, 1.0, count))
    phi = rng.uniform(0.0, 2.0 * math.pi, count)
    return r * np.exp(1j * phi)


def _radial_metric_length(r: float) -> float:
    """Hyperbolic length of the Euclidean segment [0, r] by quadrature of the metric."""
    value, _ = quad(lambda s: 2.0 / (1.0 - s * s), 0.0, r, epsabs=1e-13, epsrel=1e-13)
    return value


class TestDistance:
    def test_matches_metric_integration(self, random_gen):
        p = _random_disk_points(random_gen, CASES)
        q = _random_disk_points(random_gen, CASES)
        worst = 0.0
        for a, b in zip(p, q):
            closed = hyp_distance(DiskPoint.from_complex(a), DiskPoint.from_complex(b))
            # isometry to the origin turns the geodesic into a radius
            oracle = _radial_metric_length(abs(mobius_to_origin(a, b)))
            worst = max(worst, abs(closed - oracle) / max(oracle, 1e-12))
        assert worst < 1e-7

    def test_symmetric_and_zero_on_diagonal(self):
        p, q = DiskPoint(0.3, -0.2), DiskPoint(-0.5, 0.1)
        assert hyp_distance(p, q) == pytest.approx(hyp_distance(q, p), rel=1e-14)
        assert hyp_distance(p, p) == 0.0

    def test_conformal_factor_at_origin(self):
        assert conformal_factor(0.0) == pytest.approx(2.0)

    def test_disk_point_rejects_boundary(self):
        with pytest.raises(ValueError):
            DiskPoint(1.0, 0.0)


class TestBusemann:
    def test_matches_limit_along_ray(self, random_gen):
        t = 30.0
        points = _random_disk_points(random_gen, CASES)
        angles = random_gen.uniform(0.0, 2.0 * math.pi, CASES)
        worst = 0.0
        for z, theta in zip(points, angles):
            xi = IdealPoint(theta)
            far = math.tanh(0.5 * t) * xi.z
            num = abs(z - far)
            den = math.sqrt(1.0 - abs(z) ** 2) / math.cosh(0.5 * t)
            oracle = 2.0 * math.asinh(num / den) - t
            value = busemann(xi, DiskPoint.from_complex(z))
            worst = max(worst, abs(value - oracle) / max(1.0, abs(oracle)))
        assert worst < 1e-7

    def test_vanishes_at_origin(self):
        assert busemann(IdealPoint.from_degrees(37.0), DiskPoint.origin()) == 0.0

    def test_decreases_along_ray_at_unit_speed(self):
        xi = IdealPoint.from_degrees(120.0)
        p = DiskPoint(0.1, 0.2)
        q = point_on_ray(p, xi, 1.75)
        assert busemann(xi, q) == pytest.approx(busemann(xi, p) - 1.75, abs=1e-12)


class TestHorocycles:
    def test_foot_matches_root_finding(self, random_gen):
        worst = 0.0
        for _ in range(CASES):
            a, b = random_gen.uniform(0.0, 360.0, 2)
            if abs(a - b) < 5.0 or abs(a - b) > 355.0:
                continue
            g = Geodesic(IdealPoint.from_degrees(a), IdealPoint.from_degrees(b))
            level = random_gen.uniform(-4.0, 1.0)
            h = Horocycle(g.end, level)
            foot = geodesic_foot_on_horocycle(g, h)
            m = g.closest_point_to_origin()

            def f(s):
                return float(busemann_array(g.end.z, ray_point(m, g.end.z, s))) - level

            s = brentq(f, -25.0, 25.0, xtol=1e-14)
            oracle = complex(ray_point(m, g.end.z, s))
            worst = max(worst, abs(foot.z - oracle))
        assert worst < 1e-7

    def test_truncated_length_is_foot_distance(self, random_gen):
        worst = 0.0
        for _ in range(CASES):
            a = random_gen.uniform(0.0, 180.0)
            b = a + random_gen.uniform(10.0, 180.0)
            g = Geodesic(IdealPoint.from_degrees(a), IdealPoint.from_degrees(b))
            h1 = Horocycle(g.start, random_gen.uniform(-6.0, -3.5))
            h2 = Horocycle(g.end, random_gen.uniform(-6.0, -3.5))
            length = truncated_length(g, h1, h2)
            assert length > 0
            f1 = geodesic_foot_on_horocycle(g, h1)
            f2 = geodesic_foot_on_horocycle(g, h2)
            worst = max(worst, abs(length - hyp_distance(f1, f2)) / length)
        assert worst < 1e-7

    def test_truncated_length_accepts_either_order(self):
        g = Geodesic(IdealPoint.from_degrees(10.0), IdealPoint.from_degrees(130.0))
        h1, h2 = Horocycle(g.start, -1.0), Horocycle(g.end, -2.0)
        assert truncated_length(g, h1, h2) == pytest.approx(truncated_length(g, h2, h1))

    def test_center_must_be_endpoint(self):
        g = Geodesic(IdealPoint.from_degrees(0.0), IdealPoint.from_degrees(90.0))
        with pytest.raises(CenterNotEndpoint):
            geodesic_foot_on_horocycle(g, Horocycle(IdealPoint.from_degrees(200.0), -1.0))

    def test_shrink_lowers_level(self):
        h = Horocycle(IdealPoint.from_degrees(0.0), -1.0).shrink(0.5)
        assert h.level == -1.5
        assert h.euclidean_radius < Horocycle(IdealPoint.from_degrees(0.0), -1.0).euclidean_radius

    def test_arc_points_are_equally_spaced(self):
        h = Horocycle(IdealPoint.from_degrees(90.0), -1.0)
        g1 = Geodesic(IdealPoint.from_degrees(0.0), IdealPoint.from_degrees(90.0))
        g2 = Geodesic(IdealPoint.from_degrees(90.0), IdealPoint.from_degrees(180.0))
        p = geodesic_foot_on_horocycle(g1, h).z
        q = geodesic_foot_on_horocycle(g2, h).z
        total = horocycle_arc_length(h, p, q)
        pts = horocycle_arc_points(h, p, q, 8)
        pieces = [horocycle_arc_length(h, a, b) for a, b in zip(pts[:-1], pts[1:])]
        assert sum(pieces) == pytest.approx(total, rel=1e-10)
        assert max(pieces) - min(pieces) < 1e-9 * total
        assert np.allclose(busemann_array(h.center.z, pts), -1.0, atol=1e-9)


class TestModels:
    def test_klein_round_trip(self, random_gen):
        z = _random_disk_points(random_gen, 50)
        assert np.allclose(from_klein(to_klein(z)), z, atol=1e-14)

    def test_geodesic_points_equally_spaced(self):
        p, q = 0.2 + 0.1j, -0.6 + 0.3j
        pts = geodesic_points(p, q, 5)
        steps = [hyp_distance(DiskPoint.from_complex(a), DiskPoint.from_complex(b)) for a, b in zip(pts, pts[1:])]
        assert max(steps) - min(steps) < 1e-12

    def test_distance_to_geodesic_through_origin(self):
        g = Geodesic(IdealPoint.from_degrees(0.0), IdealPoint.from_degrees(180.0))
        z = 0.5j
        assert float(distance_to_geodesic(z, g)) == pytest.approx(2.0 * math.atanh(0.5), rel=1e-12)
