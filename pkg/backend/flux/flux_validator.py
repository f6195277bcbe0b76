"""
Flux Validator Module
Audits the flux identities and bounds of minimal graphs on truncated
polygons, and compares the fluxes of ordered solutions.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import distance_array
from backend.solvers.dirichlet import residual_norm
from backend.solvers.field import ScalarField
from .discrete_flux import Chain, FluxEvaluator

logger = logging.getLogger(__name__)

SLACK_FACTOR = 3.0
SOLUTION_TOL = 1e-8


class NotOrdered(ScherkLabError, ValueError):
    """Raised when u_low <= u_high fails at some vertex."""

    def __init__(self, vertex: int, excess: float):
        self.vertex = vertex
        self.excess = excess
        super().__init__(f"fields are not ordered: u_low exceeds u_high by {excess:.3e} at vertex {vertex}")


class BoundaryMismatch(ScherkLabError, ValueError):
    """Raised when compared fields live on different meshes or differ off the compared chains."""
    pass


class NotASolution(ScherkLabError, ValueError):
    """Raised when a compared field does not satisfy the discrete equation."""

    def __init__(self, which: str, residual: float):
        self.which = which
        self.residual = residual
        super().__init__(f"{which} is not a discrete solution (residual {residual:.3e})")


class FluxAuditFailed(ScherkLabError):
    """Raised by a strict validator when an audit breaks a flux identity or bound."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("flux audit failed: " + "; ".join(self.problems))


def arc_kind(tag: str) -> str:
    for kind in ("alpha", "beta", "gamma"):
        if tag.startswith(kind):
            return kind
    return "c" if tag.startswith("c") and tag[1:].isdigit() else "other"


@dataclass(frozen=True)
class ArcFlux:
    tag: str
    flux: float
    length: float

    @property
    def kind(self) -> str:
        return arc_kind(self.tag)

    @property
    def ratio(self) -> float:
        return self.flux / self.length if self.length > 0 else float("nan")


@dataclass
class FluxReport:
    """Per-arc fluxes with lengths, cycle totals and the slack model used."""

    arcs: list[ArcFlux]
    cycles: dict[str, float]
    h: float
    slack_factor: float = SLACK_FACTOR
    scale: float = 1.0
    level: Optional[float] = None

    def slack(self, length: float) -> float:
        return self.slack_factor * self.h ** 2 * length

    @property
    def total_slack(self) -> float:
        return sum(self.slack(a.length) for a in self.arcs)

    def _sum(self, kind: str, attr: str) -> float:
        return float(sum(getattr(a, attr) for a in self.arcs if a.kind == kind))

    @property
    def sum_alpha(self) -> float:
        return self._sum("alpha", "length")

    @property
    def sum_beta(self) -> float:
        return self._sum("beta", "length")

    @property
    def sum_c(self) -> float:
        return self._sum("c", "length")

    @property
    def bound(self) -> float:
        """Sum(|alpha|) - Sum(|beta|) + Sum(|c|)."""
        return self.sum_alpha - self.sum_beta + self.sum_c

    @property
    def total(self) -> float:
        return float(sum(a.flux for a in self.arcs))

    def clause2_violations(self) -> list[ArcFlux]:
        return [a for a in self.arcs if abs(a.flux) > a.length + self.slack(a.length)]

    def ratio_extremes(self) -> dict[str, Optional[float]]:
        alpha = [a.ratio for a in self.arcs if a.kind == "alpha"]
        beta = [a.ratio for a in self.arcs if a.kind == "beta"]
        return {
            "alpha_min": min(alpha) if alpha else None,
            "beta_max": max(beta) if beta else None,
        }

    def max_cycle(self) -> float:
        return max((abs(v) for v in self.cycles.values()), default=0.0)

    def to_dict(self) -> dict:
        return {
            "arcs": [
                {"tag": a.tag, "flux": a.flux, "length": a.length, "ratio": a.ratio}
                for a in self.arcs
            ],
            "cycles": dict(self.cycles),
            "h": self.h,
            "slack_factor": self.slack_factor,
            "scale": self.scale,
            "level": self.level,
            "sum_alpha": self.sum_alpha,
            "sum_beta": self.sum_beta,
            "sum_c": self.sum_c,
            "bound": self.bound,
            "total": self.total,
            "clause2_violations": [a.tag for a in self.clause2_violations()],
            **self.ratio_extremes(),
        }


def _mesh_h(field: ScalarField, h: Optional[float]) -> float:
    if h is not None:
        return float(h)
    meta = field.mesh.metadata.get("target_edge_length")
    if meta is not None:
        return float(meta)
    e = field.mesh.edges
    z = field.mesh.z
    return float(np.median(distance_array(z[e[:, 0]], z[e[:, 1]])))


def _loop_name(mesh, loop: list[int], k: int) -> str:
    succ_tag = {int(a): t for (a, _), t in zip(mesh.boundary_edges, mesh.boundary_tags)}
    tags = {succ_tag[v] for v in loop[:-1]}
    return tags.pop() if len(tags) == 1 else f"boundary{k}"


def flux_theorem_audit(field: ScalarField, h: Optional[float] = None, scale: float = 1.0) -> FluxReport:
    """
    Flux of every tagged boundary arc with its closed-form length, plus the
    flux of every boundary loop and interface cycle.

    Args:
        field: Converged solve, typically from scherk_solve
        h: Target edge length for the slack model (mesh metadata by default)
        scale: Length multiplier 1/a for curvature -a^2

    Returns:
        FluxReport
    """
    mesh = field.mesh
    evaluator = FluxEvaluator(field)
    arcs = []
    for tag in mesh.tags():
        length = mesh.chain_lengths.get(tag)
        if length is None:
            length = mesh.chain_polyline_length(tag)
        flux = evaluator.chain_flux(Chain.from_tag(mesh, tag))
        arcs.append(ArcFlux(tag, scale * flux, scale * float(length)))

    cycles = {}
    for k, loop in enumerate(mesh.boundary_loops(), start=1):
        cycles[_loop_name(mesh, loop, k)] = scale * evaluator.chain_flux(Chain(tuple(loop)))
    for tag in mesh.interfaces():
        cycles[tag] = scale * evaluator.chain_flux(Chain.from_tag(mesh, tag))

    level = mesh.metadata.get("level")
    report = FluxReport(
        arcs=arcs,
        cycles=cycles,
        h=_mesh_h(field, h),
        scale=scale,
        level=float(level) if level is not None else None,
    )
    logger.info(
        f"Flux audit: {len(arcs)} arcs, total {report.total:.3e}, "
        f"max cycle {report.max_cycle():.3e}, sum|c| {report.sum_c:.6g}"
    )
    return report


@dataclass(frozen=True)
class ComparisonWitness:
    """Boundary fluxes of two ordered solutions across the chains where they differ."""

    tags: tuple[str, ...]
    flux_low: float
    flux_high: float
    slack: float
    sup_difference: float

    @property
    def ordered(self) -> bool:
        return self.flux_low <= self.flux_high + self.slack

    @property
    def candidate_identical(self) -> bool:
        return abs(self.flux_high - self.flux_low) <= self.slack

    def to_dict(self) -> dict:
        return {
            "tags": list(self.tags),
            "flux_low": self.flux_low,
            "flux_high": self.flux_high,
            "slack": self.slack,
            "sup_difference": self.sup_difference,
            "ordered": self.ordered,
            "candidate_identical": self.candidate_identical,
        }


def flux_compare(
    u_low: ScalarField,
    u_high: ScalarField,
    tags: Sequence[str],
    h: Optional[float] = None,
    tol: float = SOLUTION_TOL,
) -> ComparisonWitness:
    """
    Compare the fluxes of two ordered discrete solutions across tagged boundary chains.

    The fields must agree on every boundary vertex off those chains.

    Raises:
        BoundaryMismatch: If the meshes differ or the fields differ off the chains
        NotASolution: If either field fails the discrete equation
        NotOrdered: If u_low > u_high somewhere
    """
    mesh = u_low.mesh
    if u_high.mesh is not mesh and (
        u_high.mesh.n_vertices != mesh.n_vertices or not np.array_equal(u_high.mesh.triangles, mesh.triangles)
    ):
        raise BoundaryMismatch("compared fields live on different meshes")
    tags = tuple(tags)
    if not tags:
        raise BoundaryMismatch("at least one boundary chain tag is required")

    for name, f in (("u_low", u_low), ("u_high", u_high)):
        r = residual_norm(f)
        if r > tol:
            raise NotASolution(name, r)

    free = np.zeros(mesh.n_vertices, dtype=bool)
    for tag in tags:
        if tag not in mesh.tags():
            raise BoundaryMismatch(f"mesh has no boundary chain '{tag}'")
        free[mesh.vertices_tagged(tag)] = True
    pinned = mesh.boundary_vertices[~free[mesh.boundary_vertices]]
    if len(pinned) and np.max(np.abs(u_low.values[pinned] - u_high.values[pinned])) > tol:
        raise BoundaryMismatch("fields differ on boundary vertices outside the compared chains")

    excess = u_low.values - u_high.values
    worst = int(np.argmax(excess))
    if excess[worst] > tol:
        raise NotOrdered(worst, float(excess[worst]))

    low, high = FluxEvaluator(u_low), FluxEvaluator(u_high)
    flux_low = flux_high = length = 0.0
    for tag in tags:
        chain = Chain.from_tag(mesh, tag)
        flux_low += low.chain_flux(chain)
        flux_high += high.chain_flux(chain)
        length += mesh.chain_lengths.get(tag) or mesh.chain_polyline_length(tag)

    hh = _mesh_h(u_low, h)
    witness = ComparisonWitness(
        tags=tags,
        flux_low=flux_low,
        flux_high=flux_high,
        slack=SLACK_FACTOR * hh ** 2 * length,
        sup_difference=float(np.max(np.abs(excess))),
    )
    if not witness.ordered:
        logger.error(f"Flux comparison failed on {tags}: {flux_low:.6e} > {flux_high:.6e} + slack")
    return witness


class FluxTheoremValidator:
    """Checks a FluxReport against the flux identities and bounds."""

    def __init__(
        self,
        cycle_tol: float = 1e-8,
        strict_mode: bool = False,
        min_ratio: Optional[float] = None,
        balance_tol: Optional[float] = None,
    ):
        """
        Args:
            cycle_tol: Bound on every cycle flux
            strict_mode: If True, raise FluxAuditFailed instead of returning problems
            min_ratio: If set, alpha ratios must reach it and beta ratios -min_ratio
            balance_tol: If set, the polygon is balanced and Sum(|alpha|) - Sum(|beta|)
                must vanish up to this tolerance
        """
        self.cycle_tol = cycle_tol
        self.strict_mode = strict_mode
        self.min_ratio = min_ratio
        self.balance_tol = balance_tol
        self.validation_stats = {
            "reports": 0,
            "passed": 0,
            "cycle_failures": 0,
            "bound_failures": 0,
            "sign_failures": 0,
            "ratio_failures": 0,
            "trend_failures": 0,
        }

    def _finish(self, problems: list[str]) -> tuple[bool, list[str]]:
        if problems:
            for p in problems:
                logger.warning(p)
            if self.strict_mode:
                raise FluxAuditFailed(problems)
            return False, problems
        self.validation_stats["passed"] += 1
        return True, []

    def validate(self, report: FluxReport) -> tuple[bool, list[str]]:
        self.validation_stats["reports"] += 1
        problems = []

        for name, value in report.cycles.items():
            if abs(value) > self.cycle_tol:
                self.validation_stats["cycle_failures"] += 1
                problems.append(f"cycle {name}: flux {value:.3e} exceeds {self.cycle_tol:g}")

        for arc in report.clause2_violations():
            self.validation_stats["bound_failures"] += 1
            problems.append(f"arc {arc.tag}: |flux| {abs(arc.flux):.6g} exceeds length {arc.length:.6g} plus slack")

        if abs(report.total) > report.bound + report.total_slack:
            self.validation_stats["bound_failures"] += 1
            problems.append(
                f"|total| {abs(report.total):.6g} exceeds bound {report.bound:.6g} "
                f"plus slack {report.total_slack:.3g}"
            )

        if self.balance_tol is not None:
            imbalance = report.sum_alpha - report.sum_beta
            if abs(imbalance) > self.balance_tol:
                self.validation_stats["bound_failures"] += 1
                problems.append(f"balanced polygon has Sum|alpha| - Sum|beta| = {imbalance:.3e}")

        for arc in report.arcs:
            if (arc.kind == "alpha" and arc.flux <= 0) or (arc.kind == "beta" and arc.flux >= 0):
                self.validation_stats["sign_failures"] += 1
                problems.append(f"arc {arc.tag}: flux {arc.flux:.6g} has the wrong sign")

        if self.min_ratio is not None:
            extremes = report.ratio_extremes()
            if extremes["alpha_min"] is not None and extremes["alpha_min"] < self.min_ratio:
                self.validation_stats["ratio_failures"] += 1
                problems.append(f"alpha ratio {extremes['alpha_min']:.4f} below {self.min_ratio}")
            if extremes["beta_max"] is not None and extremes["beta_max"] > -self.min_ratio:
                self.validation_stats["ratio_failures"] += 1
                problems.append(f"beta ratio {extremes['beta_max']:.4f} above {-self.min_ratio}")

        return self._finish(problems)

    def validate_levels(self, reports: Sequence[FluxReport], ratio_trend: bool = True) -> tuple[bool, list[str]]:
        """
        Depth trends over reports ordered from shallow to deep truncation:
        Sum(|c|) strictly decreases and, with ratio_trend, the smallest alpha
        ratio does not decrease.
        """
        problems = []
        sums = [r.sum_c for r in reports]
        if any(b >= a for a, b in zip(sums, sums[1:])):
            self.validation_stats["trend_failures"] += 1
            problems.append(f"sum |c| does not decrease with depth: {[f'{s:.6g}' for s in sums]}")
        if ratio_trend:
            ratios = [r.ratio_extremes()["alpha_min"] for r in reports]
            ratios = [v for v in ratios if v is not None]
            if any(b < a for a, b in zip(ratios, ratios[1:])):
                self.validation_stats["trend_failures"] += 1
                problems.append(f"alpha ratio decreases with depth: {[f'{v:.4f}' for v in ratios]}")
        return self._finish(problems)
