"""
Scherk Solver Module
Numerical ideal Scherk graphs: Dirichlet solves with +L on alpha sides and -L
on beta sides for an increasing sequence of cutoffs L, warm-started, with an
interior stabilization check.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import busemann_array, distance_array, distance_to_geodesic
from backend.meshing.triangulation import MeshParams, TriangulatedDomain, build_truncated_polygon
from backend.polygons.admissibility import AdmissibilityReport, Verdict, check_admissible
from backend.polygons.ideal_polygon import EdgeLabel, IdealPolygon, TruncationScheme
from .dirichlet import MinimalGraphSolver, SolverOptions
from .field import ScalarField

logger = logging.getLogger(__name__)

CORE_DISTANCE = 1.0
DEFAULT_GRID = (0.0, -1.0, -2.0, -3.0)


class NotAdmissible(ScherkLabError, ValueError):
    """Raised when a Scherk solve is requested for a polygon that is not certified admissible."""

    def __init__(self, report: AdmissibilityReport):
        self.report = report
        detail = "; ".join(report.reasons) or report.verdict.value
        super().__init__(f"polygon is not certified admissible ({report.verdict.value}): {detail}")


class NotStabilized(ScherkLabError):
    """Raised when interior values still drift at the final cutoff."""

    def __init__(self, message: str, drifts: Sequence[float]):
        self.drifts = list(drifts)
        super().__init__(f"{message}; interior drifts {[f'{d:.3e}' for d in self.drifts]}")


@dataclass(frozen=True)
class ContinuationRow:
    L: float
    iterations: int
    residual: float
    drift: Optional[float]


def truncation_clearance(poly: IdealPolygon, trunc: TruncationScheme, z) -> np.ndarray:
    """Lower bound of the hyperbolic distance from points of the truncated domain to its boundary arcs."""
    z = np.asarray(z, dtype=complex)
    d = np.full(z.shape, np.inf)
    for i in range(poly.n_vertices):
        d = np.minimum(d, distance_to_geodesic(z, poly.geodesic(i, i + 1)))
    for xi, level in zip(poly.ideal_points, trunc.levels):
        d = np.minimum(d, busemann_array(xi, z) - level)
    return d


def core_vertices(mesh: TriangulatedDomain, poly: IdealPolygon, trunc: TruncationScheme,
                  distance: float = CORE_DISTANCE) -> np.ndarray:
    """
    Interior vertices at distance >= `distance` from every truncation arc.

    Ideal quadrilaterals have inradius below 1; when no vertex reaches the
    requested distance the threshold falls back to half the largest clearance.
    """
    interior = mesh.interior_vertices
    clearance = truncation_clearance(poly, trunc, mesh.z[interior])
    if len(clearance) == 0:
        return interior
    threshold = distance
    if not np.any(clearance >= threshold):
        threshold = 0.5 * float(np.max(clearance))
        logger.info(f"No vertex at distance {distance:g} from the truncation arcs; using {threshold:.4f}")
    return interior[clearance >= threshold]


def scherk_boundary_values(mesh: TriangulatedDomain, poly: IdealPolygon, L: float) -> np.ndarray:
    """
    Boundary data: +L on alpha chains, -L on beta chains, and on each
    horocyclic arc the linear interpolation in arc length between the values
    of its two incident sides. Interior entries are NaN.
    """
    g = np.full(mesh.n_vertices, np.nan)
    n = poly.n_vertices
    side_value = {}
    for i in range(n):
        tag = poly.edge_tag(i)
        value = L if poly.edge_label(i) == EdgeLabel.ALPHA else -L
        side_value[i] = value
        g[mesh.vertices_tagged(tag)] = value
    for j in range(n):
        tag = f"c{j + 1}"
        chain = mesh.chain(tag)
        prev_side = (j - 1) % n
        before, after = side_value[prev_side], side_value[j]
        if chain[0] not in set(mesh.vertices_tagged(poly.edge_tag(prev_side)).tolist()):
            chain = chain[::-1]
        z = mesh.z[chain]
        s = np.concatenate([[0.0], np.cumsum(distance_array(z[:-1], z[1:]))])
        frac = s / s[-1] if s[-1] > 0 else np.zeros_like(s)
        g[chain] = before + (after - before) * frac
    return g


class ScherkSolver:
    """Continuation in the boundary cutoff L toward the ideal Scherk graph."""

    def __init__(
        self,
        poly: IdealPolygon,
        opts: Optional[SolverOptions] = None,
        level_grid: Sequence[float] = DEFAULT_GRID,
        require_admissible: bool = True,
        core_distance: float = CORE_DISTANCE,
        max_workers: Optional[int] = None,
    ):
        self.poly = poly
        self.opts = opts or SolverOptions()
        self.level_grid = list(level_grid)
        self.require_admissible = require_admissible
        self.core_distance = core_distance
        self.max_workers = max_workers
        self.report: Optional[AdmissibilityReport] = None
        self.continuation: list[ContinuationRow] = []
        self.core: np.ndarray = np.zeros(0, dtype=np.int64)
        self.stats = {"cutoffs": 0, "iterations": 0, "final_drift": None}

    def _certify(self):
        self.report = check_admissible(self.poly, self.level_grid, self.max_workers)
        if self.report.verdict != Verdict.ADMISSIBLE:
            raise NotAdmissible(self.report)

    def solve(
        self,
        trunc: TruncationScheme,
        L_sequence: Sequence[float],
        params: Optional[MeshParams] = None,
        mesh: Optional[TriangulatedDomain] = None,
    ) -> ScalarField:
        """
        Run the L-continuation.

        Raises:
            NotAdmissible: If the polygon is not certified admissible
            ValueError: If L_sequence is empty, non-positive or not increasing
            NonConvergence: If a Dirichlet solve fails
            NotStabilized: If the interior drift does not settle
        """
        L_sequence = [float(v) for v in L_sequence]
        if not L_sequence or L_sequence[0] <= 0:
            raise ValueError("L_sequence must be a nonempty list of positive cutoffs")
        if any(b <= a for a, b in zip(L_sequence, L_sequence[1:])):
            raise ValueError("L_sequence must be strictly increasing")
        if self.require_admissible:
            self._certify()

        if mesh is None:
            mesh = build_truncated_polygon(self.poly, trunc, params or MeshParams())
        self.core = core_vertices(mesh, self.poly, trunc, self.core_distance)
        solver = MinimalGraphSolver(mesh, self.opts)

        self.continuation = []
        field: Optional[ScalarField] = None
        drifts = []
        for L in L_sequence:
            g = scherk_boundary_values(mesh, self.poly, L)
            new = solver.solve(g, initial=field)
            drift = None
            if field is not None:
                drift = new.sup_difference(field, self.core)
                drifts.append(drift)
            row = ContinuationRow(L, new.info["iterations"], new.info["residual"], drift)
            self.continuation.append(row)
            drift_text = f"{drift:.6e}" if drift is not None else "-"
            logger.info(f"L={L:g}: {row.iterations} iterations, residual {row.residual:.3e}, interior drift {drift_text}")
            field = new

        self.stats["cutoffs"] = len(L_sequence)
        self.stats["iterations"] = sum(r.iterations for r in self.continuation)
        self.stats["final_drift"] = drifts[-1] if drifts else None
        self._check_stabilized(drifts)

        info = dict(field.info)
        info.update({"L": L_sequence[-1], "level": float(min(trunc.levels))})
        return ScalarField(mesh, field.values, info)

    def _check_stabilized(self, drifts: list[float]):
        if not drifts:
            return
        for a, b in zip(drifts, drifts[1:]):
            if not b < a:
                raise NotStabilized("interior drift is not strictly decreasing", drifts)
        if not drifts[-1] < self.opts.stabilization_tol:
            raise NotStabilized(
                f"final interior drift exceeds stabilization_tol {self.opts.stabilization_tol:g}", drifts
            )


def scherk_solve(
    poly: IdealPolygon,
    trunc: TruncationScheme,
    L_sequence: Sequence[float],
    params: Optional[MeshParams] = None,
    opts: Optional[SolverOptions] = None,
    level_grid: Sequence[float] = DEFAULT_GRID,
) -> ScalarField:
    """Convenience wrapper around ScherkSolver.solve."""
    return ScherkSolver(poly, opts, level_grid).solve(trunc, L_sequence, params)
