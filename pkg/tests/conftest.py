"""
Shared fixtures: polygons, coarse meshes and converged solves.
Expensive solves are session-scoped so they run once per test session.
"""

import json

import numpy as np
import pytest

from backend.meshing.triangulation import MeshParams, build_truncated_polygon
from backend.polygons.ideal_polygon import IdealPolygon, TruncationScheme
from backend.solvers.barrier import barrier_family
from backend.solvers.dirichlet import SolverOptions
from backend.solvers.scherk import ScherkSolver

SQUARE_ANGLES = (45.0, 135.0, 225.0, 315.0)
UNBALANCED_ANGLES = (0.0, 60.0, 180.0, 270.0)
COARSE_H = 0.4
TEST_LEVEL = -1.5
TEST_L = (2.0, 4.0)
BARRIER_N = (1.5, 2.0)
BARRIER_T = 0.1

SQUARE_SPEC = """\
# symmetric ideal quadrilateral
vertex 45
vertex 135
vertex 225
vertex 315
first_edge alpha
"""


@pytest.fixture(scope="session")
def square() -> IdealPolygon:
    return IdealPolygon.from_degrees(SQUARE_ANGLES)


@pytest.fixture(scope="session")
def unbalanced() -> IdealPolygon:
    return IdealPolygon.from_degrees(UNBALANCED_ANGLES)


@pytest.fixture(scope="session")
def hexagon() -> IdealPolygon:
    return IdealPolygon.from_degrees([0.0, 60.0, 120.0, 180.0, 240.0, 300.0])


@pytest.fixture(scope="session")
def coarse_params() -> MeshParams:
    return MeshParams(target_edge_length=COARSE_H)


@pytest.fixture(scope="session")
def test_opts() -> SolverOptions:
    return SolverOptions(stabilization_tol=5.0, sandwich_tol=1e-6)


@pytest.fixture(scope="session")
def square_trunc(square) -> TruncationScheme:
    return TruncationScheme.uniform(square, TEST_LEVEL)


@pytest.fixture(scope="session")
def square_mesh(square, square_trunc, coarse_params):
    return build_truncated_polygon(square, square_trunc, coarse_params)


@pytest.fixture(scope="session")
def scherk_run(square, square_trunc, square_mesh, test_opts):
    """Converged Scherk continuation on the coarse square mesh."""
    solver = ScherkSolver(square, test_opts)
    field = solver.solve(square_trunc, TEST_L, mesh=square_mesh)
    return solver, field


@pytest.fixture(scope="session")
def scherk_field(scherk_run):
    return scherk_run[1]


@pytest.fixture(scope="session")
def deep_field(square, coarse_params, test_opts):
    """Scherk solve truncated deep enough for the horoballs to miss D_2."""
    solver = ScherkSolver(square, test_opts, require_admissible=False)
    return solver.solve(TruncationScheme.uniform(square, -3.0), TEST_L, params=coarse_params)


@pytest.fixture(scope="session")
def family(square, deep_field, coarse_params, test_opts):
    return barrier_family(square, deep_field, BARRIER_T, BARRIER_N, test_opts, coarse_params)


@pytest.fixture
def random_gen() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def experiment_dir(tmp_path):
    """A polygon spec and a small, fast experiment configuration."""
    spec = tmp_path / "square.poly"
    spec.write_text(SQUARE_SPEC, encoding="utf-8")
    cfg = {
        "polygon_spec": "square.poly",
        "truncation_levels": [-1.0, -1.5],
        "L_sequence": list(TEST_L),
        "n_list": [1.5, 2.0],
        "t": 0.1,
        "mesh": {"target_edge_length": COARSE_H},
        "solver": {"stabilization_tol": 5.0, "sandwich_tol": 1e-6},
        "halfspace": {"c": 0.3, "step": 0.01, "max_offset": 1.0, "r0": 0.5},
        "audit": {"ratio_trend": False, "halving_ratio": 1.0},
        "output_dir": "out",
    }
    (tmp_path / "experiment.json").write_text(json.dumps(cfg), encoding="utf-8")
    return tmp_path
