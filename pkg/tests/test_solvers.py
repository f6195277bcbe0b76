"""Graph-area functional, Dirichlet solves and the Scherk continuation."""

import numpy as np
import pytest

from backend.experiments.pipeline import odd_symmetry_defect
from backend.polygons.ideal_polygon import EdgeLabel, TruncationScheme
from backend.solvers.area import GraphAreaFunctional, graph_area, laplace_matrix
from backend.solvers.dirichlet import (
    MinimalGraphSolver,
    NonConvergence,
    SolverOptions,
    residual_norm,
    solve_dirichlet,
)
from backend.solvers.field import ScalarField
from backend.solvers.scherk import (
    NotAdmissible,
    NotStabilized,
    ScherkSolver,
    core_vertices,
    scherk_boundary_values,
    scherk_solve,
)

from .conftest import TEST_L


def _smooth_data(mesh) -> np.ndarray:
    z = mesh.z
    g = np.full(mesh.n_vertices, np.nan)
    b = mesh.boundary_vertices
    g[b] = (z[b] ** 2).real + 0.5 * z[b].imag
    return g


class TestGraphArea:
    def test_gradient_matches_finite_differences(self, square_mesh, random_gen):
        functional = GraphAreaFunctional(square_mesh)
        u = random_gen.normal(size=square_mesh.n_vertices)
        grad = functional.gradient(u)
        h = 1e-6
        for v in random_gen.choice(square_mesh.n_vertices, 10, replace=False):
            e = np.zeros_like(u)
            e[v] = h
            fd = (functional.energy(u + e) - functional.energy(u - e)) / (2 * h)
            assert fd == pytest.approx(grad[v], abs=1e-6, rel=1e-5)

    def test_hessian_matches_gradient_differences(self, square_mesh, random_gen):
        functional = GraphAreaFunctional(square_mesh)
        u = random_gen.normal(size=square_mesh.n_vertices)
        H = functional.hessian(u)
        d = random_gen.normal(size=square_mesh.n_vertices)
        h = 1e-6
        fd = (functional.gradient(u + h * d) - functional.gradient(u - h * d)) / (2 * h)
        assert np.allclose(H @ d, fd, atol=1e-6)
        assert abs(H - H.T).max() < 1e-12

    def test_flat_graph_has_domain_area(self, square_mesh):
        field = ScalarField(square_mesh, np.full(square_mesh.n_vertices, 3.0))
        area = graph_area(field)
        assert area.excess == pytest.approx(0.0, abs=1e-12)
        assert area.domain_area == pytest.approx(square_mesh.hyperbolic_area())

    def test_laplace_rows_sum_to_zero(self, square_mesh):
        K = laplace_matrix(square_mesh)
        assert np.allclose(K @ np.ones(square_mesh.n_vertices), 0.0, atol=1e-12)

    def test_rejects_wrong_length(self, square_mesh):
        with pytest.raises(ValueError):
            GraphAreaFunctional(square_mesh).energy(np.zeros(3))


class TestDirichlet:
    def test_constant_data_gives_constant_solution(self, square_mesh):
        g = np.full(square_mesh.n_vertices, 1.25)
        field = solve_dirichlet(square_mesh, g)
        assert np.allclose(field.values, 1.25, atol=1e-12)
        assert field.info["iterations"] == 0

    def test_converges_below_tolerance(self, square_mesh):
        opts = SolverOptions()
        field = solve_dirichlet(square_mesh, _smooth_data(square_mesh), opts)
        assert residual_norm(field) < opts.residual_tol
        assert field.info["residual"] < opts.residual_tol

    def test_translation_equivariance(self, square_mesh):
        g = _smooth_data(square_mesh)
        u = solve_dirichlet(square_mesh, g)
        v = solve_dirichlet(square_mesh, g + 0.75)
        assert np.allclose(v.values, u.values + 0.75, atol=1e-7)

    def test_maximum_principle(self, square_mesh):
        g = _smooth_data(square_mesh)
        b = square_mesh.boundary_vertices
        u = solve_dirichlet(square_mesh, g)
        interior = u.values[square_mesh.interior_vertices]
        slack = 1e-3 * (np.max(g[b]) - np.min(g[b]))
        assert np.max(interior) <= np.max(g[b]) + slack
        assert np.min(interior) >= np.min(g[b]) - slack

    def test_minimizer_beats_harmonic_start(self, square_mesh):
        solver = MinimalGraphSolver(square_mesh)
        g = _smooth_data(square_mesh)
        start = solver.harmonic_extension(g)
        field = solver.solve(g)
        assert field.info["energy"] <= solver.functional.energy(start) + 1e-12
        assert solver.stats["solves"] == 1

    def test_missing_boundary_data(self, square_mesh):
        g = np.full(square_mesh.n_vertices, np.nan)
        with pytest.raises(ValueError):
            solve_dirichlet(square_mesh, g)

    def test_budget_exhaustion_raises(self, square_mesh):
        opts = SolverOptions(max_newton_iters=1, residual_tol=1e-14)
        g = 5.0 * _smooth_data(square_mesh)
        with pytest.raises(NonConvergence) as err:
            solve_dirichlet(square_mesh, g, opts)
        assert err.value.iterations <= 1
        assert err.value.diag

    def test_options_from_dict(self):
        opts = SolverOptions.from_dict({"max_newton_iters": "7", "residual_tol": 1e-9})
        assert opts.max_newton_iters == 7
        with pytest.raises(ValueError):
            SolverOptions.from_dict({"newton": 3})


class TestScherk:
    def test_boundary_values(self, square, square_mesh):
        g = scherk_boundary_values(square_mesh, square, 3.0)
        for i in range(square.n_vertices):
            expected = 3.0 if square.edge_label(i) is EdgeLabel.ALPHA else -3.0
            assert np.all(g[square_mesh.vertices_tagged(square.edge_tag(i))] == expected)
        arc = square_mesh.vertices_tagged("c1")
        assert np.all(np.abs(g[arc]) <= 3.0)
        assert np.all(np.isnan(g[square_mesh.interior_vertices]))

    def test_continuation_stabilizes(self, scherk_run, test_opts):
        solver, field = scherk_run
        assert [row.L for row in solver.continuation] == list(TEST_L)
        assert solver.continuation[0].drift is None
        assert solver.continuation[-1].drift < test_opts.stabilization_tol
        assert field.info["L"] == TEST_L[-1]
        assert residual_norm(field) < test_opts.residual_tol

    def test_wrapper_matches_solver(self, square, square_trunc, coarse_params, test_opts, scherk_field):
        field = scherk_solve(square, square_trunc, TEST_L, coarse_params, test_opts)
        assert np.array_equal(field.mesh.xy, scherk_field.mesh.xy)
        assert np.allclose(field.values, scherk_field.values, atol=1e-12)

    def test_bounded_by_cutoff(self, scherk_field):
        assert np.max(np.abs(scherk_field.values)) <= TEST_L[-1] + 1e-9

    def test_odd_under_quarter_turn(self, scherk_field, square):
        defect = odd_symmetry_defect(scherk_field, square)
        if defect is not None:
            assert defect < 1e-6

    def test_core_is_nonempty(self, square, square_mesh, square_trunc):
        core = core_vertices(square_mesh, square, square_trunc)
        assert core.size > 0
        assert not np.any(square_mesh.boundary_mask[core])

    def test_rejects_unbalanced_polygon(self, unbalanced):
        solver = ScherkSolver(unbalanced)
        with pytest.raises(NotAdmissible) as err:
            solver.solve(TruncationScheme.uniform(unbalanced, -1.5), TEST_L)
        assert err.value.report is solver.report

    @pytest.mark.parametrize("cutoffs", [[], [0.0, 1.0], [2.0, 2.0], [3.0, 1.0]])
    def test_rejects_bad_cutoffs(self, square, square_trunc, cutoffs):
        with pytest.raises(ValueError):
            ScherkSolver(square, require_admissible=False).solve(square_trunc, cutoffs)

    def test_tight_stabilization_tolerance(self, square, square_trunc, square_mesh):
        opts = SolverOptions(stabilization_tol=1e-9)
        solver = ScherkSolver(square, opts, require_admissible=False)
        with pytest.raises(NotStabilized) as err:
            solver.solve(square_trunc, TEST_L, mesh=square_mesh)
        assert len(err.value.drifts) == 1
