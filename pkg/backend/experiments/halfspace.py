"""
Half-Space Experiment Module
Vertical translation sweeps of a minimal graph against test surfaces below
it, the asymptotic barrier table, and the cylinder-exclusion check.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from backend.geometry.kernel import distance_array
from backend.solvers.barrier import BarrierFamily
from backend.solvers.field import ScalarField

logger = logging.getLogger(__name__)

ASYMPTOTIC_FOOTER = (
    "Desk-scale meshes see compact truncations only; this table reports trends, "
    "not a verdict about asymptotics."
)


class ContactType(Enum):
    INTERIOR_TOUCH = "interior-touch"
    COINCIDENCE = "coincidence"
    GAP_PERSISTS = "gap-persists"


@dataclass
class SweepResult:
    """First contact of the downward-translated graph with a test surface."""

    contact_type: ContactType
    contact_offset: float
    witness: dict = field(default_factory=dict)
    step: float = 0.0
    tolerance: float = 0.0
    steps_taken: int = 0

    def to_dict(self) -> dict:
        return {
            "contact_type": self.contact_type.value,
            "contact_offset": self.contact_offset,
            "witness": dict(self.witness),
            "step": self.step,
            "tolerance": self.tolerance,
            "steps_taken": self.steps_taken,
        }


def _check_same_mesh(sigma: ScalarField, surface: ScalarField):
    if surface.mesh is not sigma.mesh and surface.mesh.n_vertices != sigma.mesh.n_vertices:
        raise ValueError("test surface and graph live on different meshes")


def translation_sweep(
    sigma: ScalarField,
    surface: ScalarField,
    step: float = 1e-3,
    max_offset: float = 2.0,
    tol: float = 1e-9,
    vertices: Optional[np.ndarray] = None,
) -> SweepResult:
    """
    Push sigma down by offsets 0, step, 2 step, ... until it meets surface,
    then bisect the first bracket down to tol.

    Only the given vertices take part (interior vertices by default; the
    truncation boundary is artificial).

    Raises:
        ValueError: If the surface is not below sigma at offset 0, or step/tol are not positive
    """
    _check_same_mesh(sigma, surface)
    if not step > 0 or not tol > 0:
        raise ValueError("step and tol must be positive")
    if vertices is None:
        vertices = sigma.mesh.interior_vertices
    diff = sigma.values[vertices] - surface.values[vertices]
    if len(diff) == 0:
        raise ValueError("sweep needs at least one vertex")
    if np.min(diff) < -tol:
        raise ValueError(f"test surface lies above the graph by {-np.min(diff):.3e}")

    def gap(offset: float) -> float:
        return float(np.min(diff - offset))

    lo, hi = 0.0, None
    steps = 0
    offset = 0.0
    while offset <= max_offset + 0.5 * step:
        steps += 1
        if gap(offset) <= 0.0:
            hi = offset
            break
        lo = offset
        offset = steps * step
    if hi is None:
        logger.info(f"No contact within offset {max_offset:g}; minimal gap {gap(max_offset):.6e}")
        return SweepResult(ContactType.GAP_PERSISTS, max_offset, {"min_gap": gap(max_offset)}, step, tol, steps)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0.0:
            hi = mid
        else:
            lo = mid

    residual = diff - hi
    k = int(np.argmin(residual))
    v = int(vertices[k])
    spread = float(np.max(residual) - np.min(residual))
    contact = ContactType.COINCIDENCE if spread < tol else ContactType.INTERIOR_TOUCH
    witness = {
        "vertex": v,
        "x": float(sigma.mesh.xy[v, 0]),
        "y": float(sigma.mesh.xy[v, 1]),
        "graph_value": float(sigma.values[v]),
        "surface_value": float(surface.values[v]),
        "spread": spread,
    }
    logger.info(f"First contact at offset {hi:.9f} ({contact.value}) at vertex {v}")
    return SweepResult(contact, hi, witness, step, tol, steps)


def touch_experiment(sigma: ScalarField, c: float, step: float = 1e-3, max_offset: float = 2.0,
                     tol: float = 1e-9) -> SweepResult:
    """Sweep against the translate sigma - c; expect coincidence at offset c."""
    if c < 0:
        raise ValueError(f"translation c must be >= 0, got {c}")
    return translation_sweep(sigma, sigma.shifted(-c), step, max_offset, tol)


@dataclass(frozen=True)
class AsymptoticRow:
    n: float
    gap: float
    clearance: float


@dataclass
class AsymptoticTable:
    """Gap of the translated barriers to sigma - t, and their clearance below sigma."""

    t: float
    n0: float
    rows: list[AsymptoticRow]
    footer: str = ASYMPTOTIC_FOOTER

    @property
    def gaps_positive(self) -> bool:
        return all(r.gap > 0 for r in self.rows)

    @property
    def gaps_decreasing(self) -> bool:
        return all(b.gap < a.gap for a, b in zip(self.rows, self.rows[1:]))

    @property
    def below(self) -> bool:
        return all(r.clearance > 0 for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "n0": self.n0,
            "rows": [{"n": r.n, "gap": r.gap, "clearance": r.clearance} for r in self.rows],
            "gaps_positive": self.gaps_positive,
            "gaps_decreasing": self.gaps_decreasing,
            "below": self.below,
            "footer": self.footer,
        }


def translated_member(family: BarrierFamily, n: float) -> ScalarField:
    """u'_{n,t} = u_{n,t} - t: data u - t on Gamma_1 and u on Gamma_n, so it lies below u."""
    return family.member(n).shifted(-family.t)


def asymptotic_table(family: BarrierFamily) -> AsymptoticTable:
    """
    For each n: sup over A_n0 of u'_{n,t} - (u - t) and min over the interior
    vertices of A_n0 of u - u'_{n,t}.
    """
    radii = sorted(n for n, _ in family.members)
    n0 = radii[0]
    reference = family.reference
    sub0 = family.member(n0).mesh
    parents = sub0.parent_vertices
    interior = parents[sub0.interior_vertices]
    u = reference.values
    rows = []
    for n in radii:
        shifted = translated_member(family, n)
        pos = -np.ones(reference.mesh.n_vertices, dtype=np.int64)
        pos[shifted.mesh.parent_vertices] = np.arange(shifted.mesh.n_vertices)
        s_all = shifted.values[pos[parents]]
        s_int = shifted.values[pos[interior]]
        gap = float(np.max(s_all - (u[parents] - family.t)))
        clearance = float(np.min(u[interior] - s_int)) if len(interior) else float("nan")
        rows.append(AsymptoticRow(n, gap, clearance))
        logger.info(f"n={n:g}: gap to u - t {gap:.6e}, clearance below u {clearance:.6e}")
    table = AsymptoticTable(family.t, n0, rows)
    if not table.gaps_decreasing:
        logger.warning("Asymptotic gaps are not strictly decreasing in n")
    return table


@dataclass(frozen=True)
class CylinderCheck:
    """Whether a test surface avoids B(p0, r0) x (-r0, r0) around sigma."""

    p0_vertex: int
    r0: float
    ball_size: int
    min_offset: float
    avoids: bool

    def to_dict(self) -> dict:
        return {
            "p0_vertex": self.p0_vertex,
            "r0": self.r0,
            "ball_size": self.ball_size,
            "min_offset": self.min_offset,
            "avoids": self.avoids,
        }


def graph_distances(sigma: ScalarField, source: int, limit: float = np.inf) -> np.ndarray:
    """Intrinsic distances on the graph of sigma along mesh edges."""
    mesh = sigma.mesh
    e = mesh.edges
    z = mesh.z
    horizontal = distance_array(z[e[:, 0]], z[e[:, 1]])
    vertical = sigma.values[e[:, 0]] - sigma.values[e[:, 1]]
    w = np.hypot(horizontal, vertical)
    n = mesh.n_vertices
    graph = coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    return dijkstra(graph, directed=False, indices=source, limit=limit)


def cylinder_check(sigma: ScalarField, surface: ScalarField, p0: complex, r0: float) -> CylinderCheck:
    """
    Test whether the surface enters the cylinder of radius r0 over the
    intrinsic r0-ball of sigma around the vertex nearest to p0.
    """
    _check_same_mesh(sigma, surface)
    if not r0 > 0:
        raise ValueError(f"cylinder radius must be positive, got {r0}")
    v0 = sigma.mesh.nearest_vertex(p0)
    dist = graph_distances(sigma, v0, limit=r0)
    ball = np.flatnonzero(dist < r0)
    offsets = np.abs(sigma.values[ball] - surface.values[ball])
    min_offset = float(np.min(offsets))
    avoids = bool(min_offset >= r0)
    logger.info(
        f"Cylinder check at vertex {v0}, r0={r0:g}: {len(ball)} ball vertices, "
        f"min vertical offset {min_offset:.6e}, {'avoids' if avoids else 'enters'}"
    )
    return CylinderCheck(v0, float(r0), len(ball), min_offset, avoids)
