"""
Solvers Module - minimal graph Dirichlet problems, Scherk continuation and barriers.
"""

from .field import ScalarField
from .area import GraphArea, GraphAreaFunctional, graph_area, laplace_matrix
from .dirichlet import (
    MinimalGraphSolver,
    NonConvergence,
    SolverOptions,
    discrete_residual,
    residual_norm,
    solve_dirichlet,
)
from .scherk import (
    ContinuationRow,
    NotAdmissible,
    NotStabilized,
    ScherkSolver,
    core_vertices,
    scherk_boundary_values,
    scherk_solve,
    truncation_clearance,
)
from .barrier import (
    BarrierFamily,
    DomainNotCovered,
    NotHalved,
    SandwichViolated,
    TrendViolated,
    barrier_family,
    barrier_step,
    interpolate_field,
    reference_on_annulus,
)

__all__ = [
    'ScalarField',
    'GraphArea',
    'GraphAreaFunctional',
    'graph_area',
    'laplace_matrix',
    'MinimalGraphSolver',
    'NonConvergence',
    'SolverOptions',
    'discrete_residual',
    'residual_norm',
    'solve_dirichlet',
    'ContinuationRow',
    'NotAdmissible',
    'NotStabilized',
    'ScherkSolver',
    'core_vertices',
    'scherk_boundary_values',
    'scherk_solve',
    'truncation_clearance',
    'BarrierFamily',
    'DomainNotCovered',
    'NotHalved',
    'SandwichViolated',
    'TrendViolated',
    'barrier_family',
    'barrier_step',
    'interpolate_field',
    'reference_on_annulus',
]
