"""Barrier members over exhaustion annuli and their convergence column."""

import numpy as np
import pytest

from backend.flux.flux_validator import flux_compare
from backend.solvers.barrier import (
    BarrierFamily,
    DomainNotCovered,
    NotHalved,
    barrier_family,
    barrier_step,
    interpolate_field,
)

from .conftest import BARRIER_N as N_LIST
from .conftest import BARRIER_T as T


class TestInterpolation:
    def test_reproduces_vertex_values(self, scherk_field):
        values = interpolate_field(scherk_field, scherk_field.mesh.z)
        assert np.allclose(values, scherk_field.values, atol=1e-9)

    def test_outside_points_raise(self, scherk_field):
        with pytest.raises(DomainNotCovered) as err:
            interpolate_field(scherk_field, np.array([0.0, 0.999 + 0.0j]))
        assert err.value.count == 1


class TestFamily:
    def test_reference_mesh(self, family):
        mesh = family.reference.mesh
        assert mesh.metadata["kind"] == "annulus"
        assert mesh.metadata["outer_radius"] == "2"
        assert mesh.interfaces() == ["gamma1.5"]
        assert family.reference.info["role"] == "reference"

    def test_members_stay_in_band(self, family):
        for n in N_LIST:
            member = family.member(n)
            base = family.reference.values[member.mesh.parent_vertices]
            assert np.all(member.values >= base - 1e-6)
            assert np.all(member.values <= base + T + 1e-6)

    def test_outer_boundary_lifted(self, family):
        for n in N_LIST:
            member = family.member(n)
            outer = member.mesh.vertices_tagged(f"gamma{n:g}")
            base = family.reference.values[member.mesh.parent_vertices]
            assert np.allclose(member.values[outer], base[outer] + T, atol=1e-12)

    def test_column_starts_at_t_and_does_not_increase(self, family):
        column = [value for _, value in family.convergence]
        assert [n for n, _ in family.convergence] == list(N_LIST)
        assert column[0] == pytest.approx(T, abs=1e-9)
        assert column[1] <= column[0] + 1e-6

    def test_zero_height_reproduces_reference(self, square, family, test_opts):
        member = barrier_step(square, family.reference, 1.5, 0.0, test_opts)
        base = family.reference.values[member.mesh.parent_vertices]
        assert np.allclose(member.values, base, atol=1e-7)


class TestArguments:
    def test_height_above_cap(self, square, deep_field):
        with pytest.raises(ValueError):
            barrier_family(square, deep_field, 0.5, N_LIST, t_max=0.25)

    @pytest.mark.parametrize("n_list", [(), (1.0, 2.0), (2.0, 1.5)])
    def test_bad_radii(self, square, deep_field, n_list):
        with pytest.raises(ValueError):
            barrier_family(square, deep_field, T, n_list)

    def test_negative_height(self, square, family):
        with pytest.raises(ValueError):
            barrier_step(square, family.reference, 1.5, -0.1)


class TestHalving:
    def test_flag_follows_ratio(self, family):
        column = [value for _, value in family.convergence]
        assert family.halving_ratio == 0.5
        assert family.halved == (column[-1] < 0.5 * column[0])

    def test_column_that_fails_to_halve(self, scherk_field):
        stalled = BarrierFamily(
            t=T, t_max=0.25, reference=scherk_field,
            convergence=[(1.5, 0.1), (2.0, 0.08)], halved=False,
        )
        with pytest.raises(NotHalved) as err:
            stalled.require_halved()
        assert err.value.table == [(1.5, 0.1), (2.0, 0.08)]
        assert "first 1.000000e-01, last 8.000000e-02" in str(err.value)

    def test_single_member_needs_no_halving(self, scherk_field):
        BarrierFamily(t=T, t_max=0.25, reference=scherk_field, convergence=[(1.5, 0.1)]).require_halved()


class TestComparison:
    def test_member_against_reference(self, family):
        for n in N_LIST:
            member = family.member(n)
            low = family.reference.restrict(member.mesh)
            witness = flux_compare(low, member, [f"gamma{n:g}"], tol=1e-6)
            assert witness.ordered
            assert witness.sup_difference == pytest.approx(T, abs=1e-9)
