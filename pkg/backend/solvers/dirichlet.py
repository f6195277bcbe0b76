"""
Dirichlet Solver Module
Minimizes the discrete graph area over the interior nodal values with Newton
steps, Armijo backtracking and a gradient-descent fallback.
"""

import logging
import time
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Optional

import numpy as np
import scipy.sparse.linalg as spla

from backend.exceptions import ScherkLabError
from backend.meshing.triangulation import TriangulatedDomain
from .area import GraphAreaFunctional, laplace_matrix
from .field import ScalarField

logger = logging.getLogger(__name__)

ROUNDOFF_ALLOWANCE = 1e-14


class NonConvergence(ScherkLabError):
    """Raised when the iteration budget runs out before the residual tolerance is met."""

    def __init__(self, message: str, residual: float, iterations: int, diag: Optional[list] = None):
        self.residual = residual
        self.iterations = iterations
        self.diag = diag or []
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")


@dataclass(frozen=True)
class SolverOptions:
    """
    Newton, continuation and family-check settings.

    A continuation in L counts as stabilized when the sup-norm drifts of the
    solution on the core vertices strictly decrease from one cutoff to the
    next and the last drift is below stabilization_tol. The drift scales with
    the cutoff steps, so a bound such as 10 * residual_tol is never reached
    at practical L; stabilization_tol is an absolute bound (default 0.25) on
    the last drift instead.
    """

    max_newton_iters: int = 50
    residual_tol: float = 1e-10
    line_search_shrink: float = 0.5
    continuation_steps: int = 1
    armijo: float = 1e-4
    max_line_search: int = 40
    stabilization_tol: float = 0.25
    sandwich_tol: float = 1e-8

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError(f"residual_tol must be positive, got {self.residual_tol}")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError(f"line_search_shrink must lie in (0, 1), got {self.line_search_shrink}")
        if self.max_newton_iters < 1 or self.continuation_steps < 1 or self.max_line_search < 1:
            raise ValueError("iteration counts must be >= 1")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SolverOptions":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("max_newton_iters", "continuation_steps", "max_line_search"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


def _boundary_vector(mesh: TriangulatedDomain, boundary_values) -> np.ndarray:
    """Normalize boundary data to a full-length vector; every boundary vertex must be assigned."""
    n = mesh.n_vertices
    if isinstance(boundary_values, ScalarField):
        boundary_values = boundary_values.values
    if isinstance(boundary_values, Mapping):
        g = np.full(n, np.nan)
        for k, v in boundary_values.items():
            g[int(k)] = float(v)
    else:
        g = np.asarray(boundary_values, dtype=float).reshape(-1)
        if len(g) != n:
            raise ValueError(f"boundary data has {len(g)} entries, mesh has {n} vertices")
    b = mesh.boundary_vertices
    if not np.all(np.isfinite(g[b])):
        missing = b[~np.isfinite(g[b])]
        raise ValueError(f"{len(missing)} boundary vertices lack finite data, first {int(missing[0])}")
    return g


def discrete_residual(field: ScalarField) -> np.ndarray:
    """Weak-form divergence of grad u / W at every vertex; zero at interior vertices of a solution."""
    return GraphAreaFunctional(field.mesh).gradient(field.values)


def residual_norm(field: ScalarField) -> float:
    r = discrete_residual(field)[field.mesh.interior_vertices]
    return float(np.max(np.abs(r))) if len(r) else 0.0


class MinimalGraphSolver:
    """Newton minimizer of the graph area on one mesh."""

    def __init__(self, mesh: TriangulatedDomain, opts: Optional[SolverOptions] = None):
        self.mesh = mesh
        self.opts = opts or SolverOptions()
        self.functional = GraphAreaFunctional(mesh)
        self.interior = mesh.interior_vertices
        self.boundary = mesh.boundary_vertices
        self.diag: list[dict] = []
        self.stats = {
            "solves": 0,
            "newton_steps": 0,
            "gradient_steps": 0,
            "line_search_steps": 0,
            "failures": 0,
        }

    def harmonic_extension(self, g: np.ndarray) -> np.ndarray:
        """P1 Laplace extension of the boundary data; a cheap, maximum-principle respecting start."""
        u = np.array(g, dtype=float)
        if len(self.interior) == 0:
            return u
        K = laplace_matrix(self.mesh)
        I, B = self.interior, self.boundary
        rhs = -K[I][:, B] @ u[B]
        u[I] = spla.spsolve(K[I][:, I].tocsc(), rhs)
        return u

    def solve(self, boundary_values, initial=None) -> ScalarField:
        """
        Solve the Dirichlet problem.

        Args:
            boundary_values: Full-length vector (interior entries ignored), a
                mapping vertex -> value, or a ScalarField supplying its boundary values
            initial: Optional warm start (vector or ScalarField on the same mesh)

        Returns:
            ScalarField with info: iterations, residual, energy

        Raises:
            ValueError: If a boundary vertex lacks finite data
            NonConvergence: If the residual tolerance is not met
        """
        g = _boundary_vector(self.mesh, boundary_values)
        self.stats["solves"] += 1
        self.diag = []
        B = self.boundary

        if initial is None:
            u = self.harmonic_extension(g)
            steps = 1
            g0 = g
        else:
            u = np.array(initial.values if isinstance(initial, ScalarField) else initial, dtype=float)
            if u.shape != (self.mesh.n_vertices,):
                raise ValueError("warm start does not match the mesh")
            g0 = u.copy()
            steps = self.opts.continuation_steps

        total = 0
        residual = 0.0
        for k in range(1, steps + 1):
            gk = g0[B] + (g[B] - g0[B]) * (k / steps)
            u[B] = gk
            u, iters, residual = self._newton(u)
            total += iters

        energy = self.functional.energy(u)
        logger.debug(f"Dirichlet solve: {total} iterations, residual {residual:.3e}, area {energy:.10g}")
        return ScalarField(self.mesh, u, {"iterations": total, "residual": residual, "energy": energy})

    def _line_search(self, u, direction, descent, energy):
        opts = self.opts
        I = self.interior
        alpha = 1.0
        allowance = ROUNDOFF_ALLOWANCE * abs(energy)
        for _ in range(opts.max_line_search):
            self.stats["line_search_steps"] += 1
            trial = u.copy()
            trial[I] += alpha * direction
            e_trial = self.functional.energy(trial)
            if np.isfinite(e_trial) and e_trial <= energy + opts.armijo * alpha * descent + allowance:
                return trial, e_trial, alpha
            alpha *= opts.line_search_shrink
        return None, energy, alpha

    def _newton(self, u: np.ndarray) -> tuple[np.ndarray, int, float]:
        opts = self.opts
        I = self.interior
        if len(I) == 0:
            return u, 0, 0.0

        energy = self.functional.energy(u)
        residual = np.inf
        for it in range(opts.max_newton_iters + 1):
            t_iter = time.perf_counter()
            grad = self.functional.gradient(u)[I]
            residual = float(np.max(np.abs(grad)))
            if residual < opts.residual_tol:
                self.diag.append({"iter": it, "method": "converged", "res_norm": residual, "energy": energy})
                return u, it, residual
            if it == opts.max_newton_iters:
                break

            method = "newton"
            try:
                H = self.functional.hessian(u)[I][:, I].tocsc()
                direction = spla.spsolve(H, -grad)
                descent = float(grad @ direction)
                if not np.all(np.isfinite(direction)) or not descent < 0:
                    raise ArithmeticError("Newton direction is not a descent direction")
            except (ArithmeticError, RuntimeError) as e:
                logger.debug(f"Newton step {it} unusable ({e}); taking a gradient step")
                method = "gradient"
                direction = -grad
                descent = -float(grad @ grad)

            trial, e_trial, alpha = self._line_search(u, direction, descent, energy)
            if trial is None and method == "newton":
                method = "gradient"
                direction = -grad
                descent = -float(grad @ grad)
                trial, e_trial, alpha = self._line_search(u, direction, descent, energy)

            self.stats["newton_steps" if method == "newton" else "gradient_steps"] += 1
            self.diag.append({
                "iter": it,
                "method": method,
                "res_norm": residual,
                "energy": e_trial,
                "alpha": alpha,
                "accepted": trial is not None,
                "time_s": time.perf_counter() - t_iter,
            })
            if trial is None:
                self.stats["failures"] += 1
                raise NonConvergence("line search stagnated", residual, it, self.diag)
            u, energy = trial, e_trial

        self.stats["failures"] += 1
        raise NonConvergence("Newton iteration budget exhausted", residual, opts.max_newton_iters, self.diag)


def solve_dirichlet(mesh: TriangulatedDomain, boundary_values, opts: Optional[SolverOptions] = None,
                    initial=None) -> ScalarField:
    """Minimal graph over mesh with the given boundary data."""
    return MinimalGraphSolver(mesh, opts).solve(boundary_values, initial=initial)
