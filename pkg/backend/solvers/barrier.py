"""
Barrier Module
Minimal graphs u_{n,t} over exhaustion annuli A_n = D_n minus closed D_1 that
agree with a reference graph u on the inner boundary and with u + t on the
outer one, plus the family-level sandwich and convergence checks.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from matplotlib.tri import LinearTriInterpolator, Triangulation

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import DiskPoint
from backend.meshing.domains import build_exhaustion, default_basepoint
from backend.meshing.triangulation import MeshParams, TriangulatedDomain, build_annulus
from backend.polygons.ideal_polygon import IdealPolygon
from .dirichlet import MinimalGraphSolver, SolverOptions
from .field import ScalarField

logger = logging.getLogger(__name__)

INNER_RADIUS = 1.0


class DomainNotCovered(ScherkLabError):
    """Raised when a field is sampled outside the mesh it lives on."""

    def __init__(self, message: str, count: int):
        self.count = count
        super().__init__(f"{message} ({count} points uncovered)")


class SandwichViolated(ScherkLabError):
    """Raised when a barrier member leaves the band between u and u + t."""

    def __init__(self, n: float, t: float, vertex: int, value: float, lower: float, upper: float):
        self.n, self.t, self.vertex = n, t, vertex
        self.value, self.lower, self.upper = value, lower, upper
        super().__init__(
            f"u_(n={n:g}, t={t:g}) leaves [u, u+t] at vertex {vertex}: "
            f"{value:.12g} not in [{lower:.12g}, {upper:.12g}]"
        )


class TrendViolated(ScherkLabError):
    """Raised when the barrier convergence column increases with n."""

    def __init__(self, table: Sequence[tuple[float, float]]):
        self.table = list(table)
        rows = ", ".join(f"n={n:g}: {v:.6e}" for n, v in self.table)
        super().__init__(f"barrier convergence column is not non-increasing ({rows})")


class NotHalved(ScherkLabError):
    """Raised when the last barrier column entry is not below halving_ratio times the first."""

    def __init__(self, table: Sequence[tuple[float, float]], halving_ratio: float):
        self.table = list(table)
        self.halving_ratio = halving_ratio
        first, last = self.table[0][1], self.table[-1][1]
        super().__init__(
            f"barrier convergence column did not shrink below {halving_ratio:g} of its first value "
            f"(first {first:.6e}, last {last:.6e})"
        )


def interpolate_field(source: ScalarField, z: np.ndarray) -> np.ndarray:
    """
    Piecewise-linear values of source at disk points.

    Raises:
        DomainNotCovered: If some point lies outside the source mesh
    """
    mesh = source.mesh
    tri = Triangulation(mesh.xy[:, 0], mesh.xy[:, 1], mesh.triangles)
    interp = LinearTriInterpolator(tri, np.asarray(source.values))
    z = np.asarray(z, dtype=complex)
    out = interp(z.real, z.imag)
    mask = np.ma.getmaskarray(out)
    if np.any(mask):
        raise DomainNotCovered("field mesh does not cover the requested points", int(mask.sum()))
    return np.asarray(out, dtype=float)


def _mesh_basepoint(mesh: TriangulatedDomain) -> Optional[DiskPoint]:
    try:
        return DiskPoint(float(mesh.metadata["basepoint_x"]), float(mesh.metadata["basepoint_y"]))
    except KeyError:
        return None


def reference_on_annulus(
    poly: IdealPolygon,
    u_source: ScalarField,
    n_list: Sequence[float],
    params: Optional[MeshParams] = None,
    opts: Optional[SolverOptions] = None,
    basepoint: Optional[DiskPoint] = None,
) -> ScalarField:
    """
    Re-solve u on A_N, N = max(n_list), with the other radii embedded as interfaces.

    The source field (typically a Scherk solve on a truncated polygon) supplies
    Dirichlet data on Gamma_1 and Gamma_N and the warm start.

    Raises:
        DomainNotCovered: If D_N is not inside the source mesh
        NonConvergence: If the solve fails
    """
    radii = sorted(float(n) for n in n_list)
    if not radii or radii[0] <= INNER_RADIUS:
        raise ValueError(f"exhaustion radii must exceed {INNER_RADIUS:g}, got {radii}")
    basepoint = basepoint or default_basepoint(poly)
    inner = build_exhaustion(poly, basepoint, INNER_RADIUS)
    outer = build_exhaustion(poly, basepoint, radii[-1])
    mids = [build_exhaustion(poly, basepoint, n) for n in radii[:-1]]
    mesh = build_annulus(outer, inner, params or MeshParams(), mids)

    start = interpolate_field(u_source, mesh.z)
    ref = MinimalGraphSolver(mesh, opts).solve(start, initial=start)
    logger.info(f"Reference on A_{radii[-1]:g}: {ref.info['iterations']} iterations, residual {ref.info['residual']:.3e}")
    return ScalarField(mesh, ref.values, {**ref.info, "role": "reference"})


def _covers(mesh: TriangulatedDomain, n: float) -> bool:
    if mesh.metadata.get("kind") != "annulus":
        return False
    tag = f"gamma{n:g}"
    return tag in mesh.tags() or tag in mesh.interfaces()


def barrier_step(
    poly: IdealPolygon,
    u_ref: ScalarField,
    n: float,
    t: float,
    opts: Optional[SolverOptions] = None,
    params: Optional[MeshParams] = None,
) -> ScalarField:
    """
    Solve on A_n with data u_ref on Gamma_1 and u_ref + t on Gamma_n.

    When u_ref lives on an annulus carrying Gamma_n, A_n is extracted from it
    and u_ref restricted there is the reference; otherwise the reference for
    (1, n) is built first. The result's mesh maps into the reference mesh
    through parent_vertices.

    Raises:
        ValueError: If t < 0
        NonConvergence: If a solve fails
        SandwichViolated: If the result leaves [u, u + t]
    """
    if t < 0:
        raise ValueError(f"barrier height must be >= 0, got {t}")
    opts = opts or SolverOptions()
    n = float(n)

    if _covers(u_ref.mesh, n):
        basepoint = _mesh_basepoint(u_ref.mesh) or default_basepoint(poly)
        domain = build_exhaustion(poly, basepoint, n)
        sub = u_ref.mesh.submesh_inside(domain)
        base = u_ref.restrict(sub)
    else:
        ref = reference_on_annulus(poly, u_ref, [n], params, opts)
        sub = ref.mesh.submesh(np.ones(ref.mesh.n_triangles, dtype=bool))
        base = ref.restrict(sub)

    outer = sub.vertices_tagged(f"gamma{n:g}")
    if len(outer) == 0:
        raise ValueError(f"annulus A_{n:g} has no outer boundary chain gamma{n:g}")
    g = np.array(base.values)
    g[outer] += t

    member = MinimalGraphSolver(sub, opts).solve(g, initial=base)

    tol = opts.sandwich_tol
    lower = base.values - tol
    upper = base.values + t + tol
    bad = np.flatnonzero((member.values < lower) | (member.values > upper))
    if len(bad):
        v = int(bad[np.argmax(np.maximum(lower[bad] - member.values[bad], member.values[bad] - upper[bad]))])
        raise SandwichViolated(n, t, v, float(member.values[v]), float(base.values[v]), float(base.values[v] + t))
    logger.debug(f"u_(n={n:g}, t={t:g}): {member.info['iterations']} iterations, sandwich holds")
    return ScalarField(sub, member.values, {**member.info, "n": n, "t": t})


@dataclass
class BarrierFamily:
    """Barrier members over nested annuli and their convergence toward the reference."""

    t: float
    t_max: float
    reference: ScalarField
    members: dict[tuple[float, float], ScalarField] = field(default_factory=dict)
    convergence: list[tuple[float, float]] = field(default_factory=list)
    halved: bool = False
    halving_ratio: float = 0.5

    def member(self, n: float) -> ScalarField:
        return self.members[(float(n), self.t)]

    def require_halved(self):
        """
        Raises:
            NotHalved: If the column has two or more entries and did not halve
        """
        if len(self.convergence) > 1 and not self.halved:
            raise NotHalved(self.convergence, self.halving_ratio)


def _sup_over(member: ScalarField, reference: ScalarField, parents: np.ndarray) -> float:
    pos = -np.ones(reference.mesh.n_vertices, dtype=np.int64)
    pos[member.mesh.parent_vertices] = np.arange(member.mesh.n_vertices)
    local = pos[parents]
    if np.any(local < 0):
        raise ValueError("annulus members are not nested in the reference mesh")
    return float(np.max(member.values[local] - reference.values[parents]))


def barrier_family(
    poly: IdealPolygon,
    u_ref: ScalarField,
    t: float,
    n_list: Sequence[float],
    opts: Optional[SolverOptions] = None,
    params: Optional[MeshParams] = None,
    t_max: float = 0.25,
    max_workers: Optional[int] = None,
    basepoint: Optional[DiskPoint] = None,
    halving_ratio: float = 0.5,
) -> BarrierFamily:
    """
    Compute u_{n,t} for every n and the column sup over A_{n0} of (u_{n,t} - u).

    The column halves when its last entry is below halving_ratio times its
    first; require_halved turns a miss into NotHalved.

    Raises:
        ValueError: If t is outside [0, t_max] or n_list is not increasing above 1
        TrendViolated: If the column increases by more than sandwich_tol
    """
    if not 0 <= t <= t_max:
        raise ValueError(f"barrier height must satisfy 0 <= t <= t_max, got t={t}, t_max={t_max}")
    radii = [float(n) for n in n_list]
    if not radii or radii[0] <= INNER_RADIUS or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"n_list must be strictly increasing with entries > {INNER_RADIUS:g}, got {radii}")
    opts = opts or SolverOptions()

    mesh = u_ref.mesh
    if all(_covers(mesh, n) for n in radii) and mesh.metadata.get("outer_radius") == f"{radii[-1]:g}":
        reference = u_ref
    else:
        reference = reference_on_annulus(poly, u_ref, radii, params, opts, basepoint)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda n: barrier_step(poly, reference, n, t, opts), radii))

    family = BarrierFamily(t=t, t_max=t_max, reference=reference, halving_ratio=halving_ratio)
    for n, member in zip(radii, results):
        family.members[(n, t)] = member

    parents = results[0].mesh.parent_vertices
    family.convergence = [(n, _sup_over(m, reference, parents)) for n, m in zip(radii, results)]
    for n, value in family.convergence:
        logger.info(f"n={n:g}: sup over A_{radii[0]:g} of (u_(n,t) - u) = {value:.6e}")

    column = [v for _, v in family.convergence]
    if any(b > a + opts.sandwich_tol for a, b in zip(column, column[1:])):
        raise TrendViolated(family.convergence)
    family.halved = len(column) > 1 and column[-1] < halving_ratio * column[0]
    if not family.halved and len(column) > 1:
        logger.warning(f"Convergence column did not halve: first {column[0]:.4e}, last {column[-1]:.4e}")
    return family
