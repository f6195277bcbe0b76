"""Discrete chain fluxes, the flux audit and ordered-solution comparisons."""

import numpy as np
import pytest

from backend.flux import (
    ArcFlux,
    BoundaryMismatch,
    Chain,
    DisconnectedChain,
    FluxAuditFailed,
    FluxEvaluator,
    FluxReport,
    FluxTheoremValidator,
    NotASolution,
    NotClosed,
    NotOrdered,
    arc_kind,
    flux_compare,
    flux_cycle_check,
    flux_on_chain,
    flux_theorem_audit,
)
from backend.meshing.triangulation import MeshParams, build_truncated_polygon
from backend.solvers.dirichlet import solve_dirichlet
from backend.solvers.field import ScalarField


@pytest.fixture(scope="module")
def evaluator(scherk_field):
    return FluxEvaluator(scherk_field)


@pytest.fixture(scope="module")
def audit(scherk_field):
    return flux_theorem_audit(scherk_field)


@pytest.fixture(scope="module")
def fine_field(square, square_trunc):
    """Minimal graph on a finer square mesh, with room for several interior rings."""
    mesh = build_truncated_polygon(square, square_trunc, MeshParams(target_edge_length=0.15))
    return solve_dirichlet(mesh, 2.0 * mesh.z.real)


def nested_cycles(mesh, count: int) -> list[Chain]:
    """Boundaries of successive vertex stars grown from the vertex nearest the origin."""
    tris = mesh.triangles
    region = np.array([mesh.nearest_vertex(0j)])
    cycles = []
    for _ in range(count):
        mask = np.any(np.isin(tris, region), axis=1)
        assert not np.any(mesh.boundary_mask[tris[mask]])
        sub = mesh.submesh(mask)
        (loop,) = sub.boundary_loops()
        cycles.append(Chain(tuple(int(v) for v in sub.parent_vertices[loop])))
        region = np.unique(tris[mask])
    return cycles


class TestChainFlux:
    def test_reversal_flips_sign(self, evaluator, square_mesh):
        chain = Chain.from_tag(square_mesh, "alpha1")
        forward = evaluator.chain_flux(chain)
        assert evaluator.chain_flux(chain.reversed()) == pytest.approx(-forward, abs=1e-12)
        assert evaluator.chain_flux(chain, orientation=-1) == pytest.approx(-forward, abs=1e-14)

    def test_additive_over_concatenation(self, evaluator, square_mesh):
        first = Chain.from_tag(square_mesh, "alpha1")
        second = Chain.from_tag(square_mesh, "c2")
        joined = evaluator.chain_flux(first + second)
        assert joined == pytest.approx(evaluator.chain_flux(first) + evaluator.chain_flux(second), abs=1e-12)

    def test_boundary_cycle_vanishes(self, scherk_field, square_mesh):
        loop = square_mesh.boundary_loops()[0]
        assert abs(flux_cycle_check(scherk_field, loop)) < 1e-7

    def test_sequence_input(self, scherk_field, square_mesh, evaluator):
        chain = square_mesh.chain("beta1")
        assert flux_on_chain(scherk_field, chain) == pytest.approx(
            evaluator.chain_flux(Chain(tuple(chain))), abs=1e-14
        )

    def test_open_cycle_rejected(self, scherk_field, square_mesh):
        with pytest.raises(NotClosed):
            flux_cycle_check(scherk_field, square_mesh.chain("alpha1"))

    def test_chain_must_follow_edges(self, evaluator, square_mesh):
        a = square_mesh.chain("alpha1")[0]
        b = square_mesh.chain("alpha2")[0]
        with pytest.raises(DisconnectedChain):
            evaluator.chain_flux(Chain((a, b)))

    def test_open_chain_must_end_on_boundary(self, evaluator, square_mesh):
        start = square_mesh.chain("alpha1")[1]
        inner = next(
            int(v) for a, b in square_mesh.edges.tolist()
            for v in (a, b)
            if start in (a, b) and not square_mesh.boundary_mask[v]
        )
        with pytest.raises(DisconnectedChain):
            evaluator.chain_flux(Chain((start, inner)))

    def test_concatenation_needs_shared_endpoint(self, square_mesh):
        with pytest.raises(DisconnectedChain):
            Chain.from_tag(square_mesh, "alpha1") + Chain.from_tag(square_mesh, "alpha2")

    def test_orientation_values(self, evaluator, square_mesh):
        with pytest.raises(ValueError):
            evaluator.chain_flux(Chain.from_tag(square_mesh, "alpha1"), orientation=0)


class TestAudit:
    def test_arc_signs(self, audit):
        for arc in audit.arcs:
            if arc.kind == "alpha":
                assert arc.flux > 0
            elif arc.kind == "beta":
                assert arc.flux < 0

    def test_fluxes_bounded_by_lengths(self, audit):
        assert audit.clause2_violations() == []

    def test_total_and_cycles_vanish(self, audit):
        assert abs(audit.total) < 1e-7
        assert audit.max_cycle() < 1e-7
        assert len(audit.cycles) == 1

    def test_balanced_bound(self, audit):
        assert audit.sum_alpha == pytest.approx(audit.sum_beta, rel=1e-9)
        assert audit.bound == pytest.approx(audit.sum_c)
        assert audit.level == pytest.approx(-1.5)

    def test_scale_multiplies_lengths_and_fluxes(self, scherk_field, audit):
        scaled = flux_theorem_audit(scherk_field, scale=2.0)
        for a, b in zip(audit.arcs, scaled.arcs):
            assert b.flux == pytest.approx(2.0 * a.flux)
            assert b.length == pytest.approx(2.0 * a.length)

    def test_validator_accepts_solution(self, audit):
        validator = FluxTheoremValidator(cycle_tol=1e-7)
        ok, problems = validator.validate(audit)
        assert ok, problems
        assert validator.validation_stats["passed"] == 1

    def test_report_serializes(self, audit):
        data = audit.to_dict()
        assert len(data["arcs"]) == 8
        assert data["clause2_violations"] == []


class TestHomotopy:
    def test_nested_interior_cycles_agree(self, fine_field):
        cycles = nested_cycles(fine_field.mesh, 3)
        assert len(set(cycles[0].vertices)) < len(set(cycles[1].vertices)) < len(set(cycles[2].vertices))
        evaluator = FluxEvaluator(fine_field)
        fluxes = [evaluator.chain_flux(c) for c in cycles]
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(fluxes[i] - fluxes[j]) < 1e-8


class TestValidator:
    @staticmethod
    def _report(alpha_flux: float, cycle: float = 0.0) -> FluxReport:
        arcs = [
            ArcFlux("alpha1", alpha_flux, 2.0),
            ArcFlux("beta1", -1.5, 2.0),
            ArcFlux("c1", -0.1, 0.5),
        ]
        return FluxReport(arcs=arcs, cycles={"boundary": cycle}, h=0.1)

    def test_bound_and_sign_problems(self):
        ok, problems = FluxTheoremValidator().validate(self._report(alpha_flux=-3.0))
        assert not ok
        assert any("wrong sign" in p for p in problems)
        assert any("exceeds length" in p for p in problems)

    def test_cycle_problem(self):
        validator = FluxTheoremValidator(cycle_tol=1e-6)
        ok, _ = validator.validate(self._report(alpha_flux=1.6, cycle=1e-3))
        assert not ok
        assert validator.validation_stats["cycle_failures"] == 1

    def test_strict_mode_raises(self):
        with pytest.raises(FluxAuditFailed) as err:
            FluxTheoremValidator(strict_mode=True).validate(self._report(alpha_flux=-3.0))
        assert err.value.problems

    def test_min_ratio(self):
        ok, problems = FluxTheoremValidator(min_ratio=0.9).validate(self._report(alpha_flux=1.6))
        assert not ok
        assert len(problems) == 2

    def test_total_above_bound(self):
        arcs = [ArcFlux("alpha1", 0.2, 2.0), ArcFlux("beta1", -0.05, 2.0), ArcFlux("c1", 0.49, 0.5)]
        report = FluxReport(arcs=arcs, cycles={"boundary": 0.0}, h=0.01)
        assert report.total == pytest.approx(0.64)
        assert report.bound == pytest.approx(0.5)
        validator = FluxTheoremValidator(min_ratio=0.9)
        ok, problems = validator.validate(report)
        assert not ok
        assert any("exceeds bound" in p for p in problems)
        assert any("alpha ratio 0.1000" in p for p in problems)
        assert validator.validation_stats["bound_failures"] == 1

    def test_balanced_polygon_needs_equal_sums(self):
        arcs = [ArcFlux("alpha1", 1.4, 2.0), ArcFlux("beta1", -1.4, 1.5), ArcFlux("c1", 0.0, 0.5)]
        report = FluxReport(arcs=arcs, cycles={}, h=0.1)
        assert FluxTheoremValidator().validate(report) == (True, [])
        ok, problems = FluxTheoremValidator(balance_tol=1e-9).validate(report)
        assert not ok
        assert problems == ["balanced polygon has Sum|alpha| - Sum|beta| = 5.000e-01"]

    @staticmethod
    def _level(sum_c: float, alpha_ratio: float) -> FluxReport:
        arcs = [
            ArcFlux("alpha1", alpha_ratio * 2.0, 2.0),
            ArcFlux("beta1", -alpha_ratio * 2.0, 2.0),
            ArcFlux("c1", 0.0, sum_c),
        ]
        return FluxReport(arcs=arcs, cycles={}, h=0.1)

    def test_depth_trends(self):
        validator = FluxTheoremValidator()
        deeper = [self._level(1.0, 0.80), self._level(0.5, 0.88), self._level(0.25, 0.93)]
        assert validator.validate_levels(deeper) == (True, [])

        ok, problems = validator.validate_levels([self._level(1.0, 0.80), self._level(1.2, 0.88)])
        assert not ok
        assert problems[0].startswith("sum |c| does not decrease")

        falling = [self._level(1.0, 0.90), self._level(0.5, 0.85)]
        ok, problems = validator.validate_levels(falling)
        assert problems == ["alpha ratio decreases with depth: ['0.9000', '0.8500']"]
        assert validator.validate_levels(falling, ratio_trend=False) == (True, [])
        assert validator.validation_stats["trend_failures"] == 2

    def test_ratio_extremes(self):
        extremes = self._report(alpha_flux=1.6).ratio_extremes()
        assert extremes["alpha_min"] == pytest.approx(0.8)
        assert extremes["beta_max"] == pytest.approx(-0.75)

    @pytest.mark.parametrize("tag, kind", [
        ("alpha2", "alpha"), ("beta1", "beta"), ("c3", "c"), ("gamma1.5", "gamma"), ("cut", "other"),
    ])
    def test_arc_kind(self, tag, kind):
        assert arc_kind(tag) == kind


class TestCompare:
    def test_shifted_solution(self, scherk_field, square_mesh):
        high = scherk_field.shifted(0.5)
        witness = flux_compare(scherk_field, high, square_mesh.tags())
        assert witness.ordered
        assert witness.candidate_identical
        assert witness.sup_difference == pytest.approx(0.5)

    def test_reversed_order_rejected(self, scherk_field, square_mesh):
        with pytest.raises(NotOrdered):
            flux_compare(scherk_field.shifted(0.5), scherk_field, square_mesh.tags())

    def test_boundary_must_agree_off_chains(self, scherk_field):
        with pytest.raises(BoundaryMismatch):
            flux_compare(scherk_field, scherk_field.shifted(0.5), ["alpha1"])

    def test_unknown_tag(self, scherk_field):
        with pytest.raises(BoundaryMismatch):
            flux_compare(scherk_field, scherk_field, ["gamma3"])

    def test_non_solution_rejected(self, scherk_field, square_mesh, random_gen):
        noisy = ScalarField(square_mesh, scherk_field.values + 0.1 * random_gen.normal(size=square_mesh.n_vertices))
        with pytest.raises(NotASolution):
            flux_compare(noisy, noisy.shifted(1.0), square_mesh.tags())
