"""Truncated-polygon and annulus meshes, exhaustion domains."""

import math

import numpy as np
import pytest

import backend.meshing.domains as domains_module
from backend.geometry.kernel import DiskPoint, distance_array
from backend.meshing.domains import (
    NotDecreasing,
    NotNested,
    build_exhaustion,
    check_nested,
    nested_truncations,
    truncation_covers,
)
from backend.meshing.triangulation import CUT_TAG, MeshParams, build_annulus, build_truncated_polygon
from backend.polygons.ideal_polygon import DisjointnessViolated, TruncationScheme

SQUARE_TAGS = ["alpha1", "alpha2", "beta1", "beta2", "c1", "c2", "c3", "c4"]


def _signed_area(z: np.ndarray) -> float:
    return 0.5 * float(np.sum((np.conj(z[:-1]) * z[1:]).imag))


@pytest.fixture(scope="module")
def domains(square):
    origin = DiskPoint.origin()
    return {n: build_exhaustion(square, origin, n) for n in (1.0, 1.5, 2.0)}


@pytest.fixture(scope="module")
def annulus(domains, coarse_params):
    return build_annulus(domains[2.0], domains[1.0], coarse_params, interfaces=[domains[1.5]])


class TestMeshParams:
    @pytest.mark.parametrize("h", [0.0, -0.1, float("inf")])
    def test_rejects_bad_targets(self, h):
        with pytest.raises(ValueError):
            MeshParams(target_edge_length=h)

    def test_rejects_grading_below_one(self):
        with pytest.raises(ValueError):
            MeshParams(grading=0.5)

    def test_dict_round_trip(self):
        params = MeshParams(0.2, 1.5)
        assert MeshParams.from_dict(params.to_dict()) == params


class TestTruncatedPolygon:
    def test_is_conforming_disk(self, square_mesh):
        square_mesh.check_conforming()
        assert square_mesh.euler_characteristic() == 1
        assert len(square_mesh.boundary_loops()) == 1
        assert square_mesh.interior_vertices.size > 0

    def test_chain_tags(self, square_mesh):
        assert square_mesh.tags() == SQUARE_TAGS
        for tag in SQUARE_TAGS:
            chain = square_mesh.chain(tag)
            assert chain[0] != chain[-1]

    def test_chains_meet_end_to_end(self, square_mesh):
        # alpha1 runs from vertex 0 to vertex 1, then the arc c2 turns around vertex 1
        assert square_mesh.chain("alpha1")[-1] == square_mesh.chain("c2")[0]
        assert square_mesh.chain("c2")[-1] == square_mesh.chain("beta1")[0]

    def test_boundary_keeps_domain_on_the_left(self, square_mesh):
        loop = square_mesh.boundary_loops()[0]
        assert _signed_area(square_mesh.z[loop]) > 0.0

    def test_geodesic_chains_match_truncated_lengths(self, square_mesh):
        for tag in ("alpha1", "beta1", "alpha2", "beta2"):
            assert square_mesh.chain_polyline_length(tag) == pytest.approx(
                square_mesh.chain_lengths[tag], rel=1e-8
            )

    def test_arc_chains_approximate_horocycle_lengths(self, square_mesh):
        for tag in ("c1", "c2", "c3", "c4"):
            polyline = square_mesh.chain_polyline_length(tag)
            exact = square_mesh.chain_lengths[tag]
            assert polyline <= exact * (1.0 + 1e-12)
            assert polyline == pytest.approx(exact, rel=0.05)

    def test_area_is_ideal_area_minus_horocycle_arcs(self, square_mesh):
        arcs = sum(square_mesh.chain_lengths[f"c{i}"] for i in range(1, 5))
        assert square_mesh.hyperbolic_area() == pytest.approx(2.0 * math.pi - arcs, rel=0.08)

    def test_metadata(self, square_mesh):
        assert square_mesh.metadata["kind"] == "truncated"
        assert float(square_mesh.metadata["level"]) == -1.5
        assert len(square_mesh.metadata["levels"].split(",")) == 4

    def test_rejects_overlapping_horoballs(self, square, coarse_params):
        with pytest.raises(DisjointnessViolated):
            build_truncated_polygon(square, TruncationScheme.uniform(square, 0.0), coarse_params)


class TestExhaustion:
    def test_corners_at_requested_distance(self, domains):
        d = domains[2.0]
        radii = distance_array(0j, d.corners)
        assert np.allclose(radii, 2.0, atol=1e-10)
        assert d.interior_angles_ok()
        assert d.tag == "gamma2"

    def test_nesting(self, domains):
        check_nested(domains[1.0], domains[2.0])
        with pytest.raises(NotNested):
            check_nested(domains[2.0], domains[1.0])

    def test_basepoint_outside_polygon(self, square):
        with pytest.raises(ValueError):
            build_exhaustion(square, DiskPoint(0.99, 0.0), 1.0)

    def test_corner_off_radius_rejected(self, square, monkeypatch):
        exact = domains_module.ray_point
        monkeypatch.setattr(domains_module, "ray_point", lambda p, xi, n: exact(p, xi, n * (1 + 1e-6)))
        with pytest.raises(ValueError, match="corner radii deviate"):
            build_exhaustion(square, DiskPoint.origin(), 2.0)

    def test_nested_truncations_must_decrease(self, square):
        schemes = nested_truncations(square, [-1.0, -2.0])
        assert [t.levels[0] for t in schemes] == [-1.0, -2.0]
        with pytest.raises(NotDecreasing):
            nested_truncations(square, [-1.0, -1.0])
        with pytest.raises(NotDecreasing):
            nested_truncations(square, [])

    def test_truncation_covers(self, square, domains):
        trunc = TruncationScheme.uniform(square, -1.5)
        assert truncation_covers(square, trunc, domains[1.0])
        assert not truncation_covers(square, trunc, domains[2.0])


class TestAnnulus:
    def test_topology(self, annulus):
        annulus.check_conforming()
        assert annulus.euler_characteristic() == 0
        assert len(annulus.boundary_loops()) == 2
        assert annulus.tags() == ["gamma1", "gamma2"]
        assert annulus.interfaces() == ["gamma1.5"]

    def test_interface_chain_is_closed(self, annulus):
        chain = annulus.chain("gamma1.5")
        assert chain[0] == chain[-1]

    def test_regions_split_at_interface(self, annulus):
        assert np.unique(annulus.regions()).size == 2

    def test_submesh_inside(self, annulus, domains):
        inner = annulus.submesh_inside(domains[1.5])
        inner.check_conforming()
        assert inner.tags() == ["gamma1", "gamma1.5"]
        assert inner.metadata["outer_radius"] == "1.5"
        assert CUT_TAG not in inner.tags()
        assert np.allclose(inner.xy, annulus.xy[inner.parent_vertices])
        assert inner.hyperbolic_area() < annulus.hyperbolic_area()
