"""
Admissibility Module
Enumerates inscribed polygons and certifies admissibility of an ideal polygon
by searching a grid of uniform truncation levels.

Margins depend affinely on a uniform truncation shift, so every inscribed
polygon also carries the exact slope of its margins; a margin that cannot
decrease under deeper truncation turns a failure into a refutation.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from backend.exceptions import ScherkLabError
from .ideal_polygon import (
    DisjointnessViolated,
    EdgeLabel,
    IdealPolygon,
    TruncationScheme,
    chord_length,
    intrinsic_balance,
    is_valid_truncation,
)

logger = logging.getLogger(__name__)

BALANCE_TOL = 1e-8
MARGIN_TOL = 1e-9


class EmptyGrid(ScherkLabError, ValueError):
    """Raised when admissibility is requested over an empty level grid."""
    pass


class EdgeKind(Enum):
    """Classification of an inscribed polygon's edge."""
    BOUNDARY_ALPHA = "boundary-alpha"
    BOUNDARY_BETA = "boundary-beta"
    INTERIOR = "interior"


class Verdict(Enum):
    ADMISSIBLE = "admissible"
    NOT_ADMISSIBLE = "not-admissible"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class InscribedPolygon:
    """Cyclic subset (size >= 3) of the parent polygon's vertex indices."""

    vertex_indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.vertex_indices)
        if len(idx) < 3:
            raise ValueError(f"an inscribed polygon needs at least 3 vertices, got {idx}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"inscribed vertex indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "vertex_indices", idx)

    def is_full(self, parent: IdealPolygon) -> bool:
        return len(self.vertex_indices) == parent.n_vertices

    def edges(self, parent: IdealPolygon) -> list[tuple[int, int, EdgeKind]]:
        n = parent.n_vertices
        out = []
        idx = self.vertex_indices
        for a, b in zip(idx, idx[1:] + idx[:1]):
            if (a + 1) % n == b:
                label = parent.edge_label(a)
                kind = EdgeKind.BOUNDARY_ALPHA if label is EdgeLabel.ALPHA else EdgeKind.BOUNDARY_BETA
            else:
                kind = EdgeKind.INTERIOR
            out.append((a, b, kind))
        return out

    def edge_counts(self, parent: IdealPolygon) -> dict[EdgeKind, int]:
        counts = {kind: 0 for kind in EdgeKind}
        for _, _, kind in self.edges(parent):
            counts[kind] += 1
        return counts

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.vertex_indices) + "}"


def enumerate_inscribed(poly: IdealPolygon) -> list[InscribedPolygon]:
    """All cyclic vertex subsets of size >= 3, the full polygon included (last)."""
    n = poly.n_vertices
    return [
        InscribedPolygon(combo)
        for m in range(3, n + 1)
        for combo in itertools.combinations(range(n), m)
    ]


def inscribed_margins(poly: IdealPolygon, sub: InscribedPolygon, trunc: TruncationScheme) -> tuple[float, float]:
    """
    (2a(P) - |P|, 2b(P) - |P|) for an inscribed polygon P.

    a(P), b(P) sum the boundary-alpha / boundary-beta edges; |P| sums every edge,
    interior diagonals included.
    """
    a = b = total = 0.0
    for i, j, kind in sub.edges(poly):
        length = chord_length(poly, trunc, i, j)
        total += length
        if kind is EdgeKind.BOUNDARY_ALPHA:
            a += length
        elif kind is EdgeKind.BOUNDARY_BETA:
            b += length
    return 2.0 * a - total, 2.0 * b - total


def margin_slopes(poly: IdealPolygon, sub: InscribedPolygon) -> tuple[float, float]:
    """Rate of change of both margins per unit of uniform deepening."""
    counts = sub.edge_counts(poly)
    n_edges = sum(counts.values())
    return (
        2.0 * (2 * counts[EdgeKind.BOUNDARY_ALPHA] - n_edges),
        2.0 * (2 * counts[EdgeKind.BOUNDARY_BETA] - n_edges),
    )


@dataclass
class InscribedAudit:
    """Margins of one inscribed polygon over the tested levels."""

    sub: InscribedPolygon
    margins: dict[float, tuple[float, float]]
    slopes: tuple[float, float]
    passing_levels: list[float]

    @property
    def passes(self) -> bool:
        return bool(self.passing_levels)

    @property
    def passing_level(self) -> Optional[float]:
        return self.passing_levels[0] if self.passing_levels else None

    @property
    def worst(self) -> tuple[float, float]:
        return (
            max(m[0] for m in self.margins.values()),
            max(m[1] for m in self.margins.values()),
        )

    def failing_slopes(self, deepest: float, tol: float) -> list[float]:
        """Slopes of the margins that are not strictly negative at the deepest level."""
        a, b = self.margins[deepest]
        out = []
        if a >= -tol:
            out.append(self.slopes[0])
        if b >= -tol:
            out.append(self.slopes[1])
        return out

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.sub.vertex_indices),
            "worst": list(self.worst),
            "slopes": list(self.slopes),
            "passing_level": self.passing_level,
            "passing_levels": list(self.passing_levels),
        }


@dataclass
class AdmissibilityReport:
    """Outcome of an admissibility search."""

    balance: float
    verdict: Verdict
    inscribed: list[InscribedAudit]
    tested_levels: list[float]
    skipped_levels: list[float] = field(default_factory=list)
    simultaneous_levels: list[float] = field(default_factory=list)
    reasons: list[str] = field(default_factory=list)
    balance_tol: float = BALANCE_TOL
    margin_tol: float = MARGIN_TOL

    @property
    def failing(self) -> list[InscribedAudit]:
        return [audit for audit in self.inscribed if not audit.passes]

    def to_dict(self) -> dict:
        return {
            "balance": self.balance,
            "verdict": self.verdict.value,
            "tested_levels": list(self.tested_levels),
            "skipped_levels": list(self.skipped_levels),
            "simultaneous_levels": list(self.simultaneous_levels),
            "reasons": list(self.reasons),
            "balance_tol": self.balance_tol,
            "margin_tol": self.margin_tol,
            "inscribed": [audit.to_dict() for audit in self.inscribed],
        }


class AdmissibilityChecker:
    """Searches uniform truncation levels for admissibility witnesses."""

    def __init__(
        self,
        balance_tol: float = BALANCE_TOL,
        margin_tol: float = MARGIN_TOL,
        max_workers: Optional[int] = None,
    ):
        """
        Args:
            balance_tol: Tolerance on |a(G) - b(G)|
            margin_tol: Margins must be below -margin_tol to pass
            max_workers: Thread cap for margin evaluation (None or 0 = auto)
        """
        self.balance_tol = balance_tol
        self.margin_tol = margin_tol
        self.max_workers = max_workers or None
        self.stats = {
            "inscribed": 0,
            "levels_tested": 0,
            "levels_skipped": 0,
            "passing": 0,
            "failing": 0,
        }

    def _audit(self, poly: IdealPolygon, sub: InscribedPolygon, schemes: dict[float, TruncationScheme]) -> InscribedAudit:
        margins = {level: inscribed_margins(poly, sub, trunc) for level, trunc in schemes.items()}
        passing = [
            level for level, (a, b) in margins.items()
            if a < -self.margin_tol and b < -self.margin_tol
        ]
        return InscribedAudit(sub=sub, margins=margins, slopes=margin_slopes(poly, sub), passing_levels=passing)

    def check(self, poly: IdealPolygon, level_grid: Sequence[float]) -> AdmissibilityReport:
        """
        Certify admissibility over a grid of uniform truncation levels.

        Raises:
            EmptyGrid: If level_grid is empty
            DisjointnessViolated: If no grid level yields a valid truncation
        """
        if not level_grid:
            raise EmptyGrid("admissibility needs at least one truncation level")

        levels = sorted({float(s) for s in level_grid}, reverse=True)
        schemes = {}
        skipped = []
        for level in levels:
            trunc = TruncationScheme.uniform(poly, level)
            if is_valid_truncation(poly, trunc):
                schemes[level] = trunc
            else:
                logger.warning(f"Skipping truncation level {level}: horoballs overlap")
                skipped.append(level)
        self.stats["levels_tested"] = len(schemes)
        self.stats["levels_skipped"] = len(skipped)
        if not schemes:
            raise DisjointnessViolated(f"no level of the grid {levels} gives disjoint horoballs")

        bal = intrinsic_balance(poly)
        subs = [sub for sub in enumerate_inscribed(poly) if not sub.is_full(poly)]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            audits = list(pool.map(lambda sub: self._audit(poly, sub, schemes), subs))

        self.stats["inscribed"] = len(audits)
        self.stats["passing"] = sum(1 for a in audits if a.passes)
        self.stats["failing"] = len(audits) - self.stats["passing"]

        tested = list(schemes)
        simultaneous = [
            level for level in tested
            if all(level in audit.passing_levels for audit in audits)
        ]
        deepest = min(tested)
        reasons = []

        if abs(bal) > self.balance_tol:
            verdict = Verdict.NOT_ADMISSIBLE
            reasons.append(f"balance a-b = {bal:.12g} exceeds tolerance {self.balance_tol:g}")
        else:
            failing = [a for a in audits if not a.passes]
            if not failing:
                verdict = Verdict.ADMISSIBLE
            else:
                verdict = Verdict.INCONCLUSIVE
                for audit in failing:
                    slopes = audit.failing_slopes(deepest, self.margin_tol)
                    if any(s >= 0.0 for s in slopes):
                        verdict = Verdict.NOT_ADMISSIBLE
                        reasons.append(
                            f"inscribed {audit.sub.label()} cannot pass: margin slope "
                            f"{max(slopes):+g} under deeper truncation"
                        )
                    else:
                        reasons.append(
                            f"inscribed {audit.sub.label()} fails on the grid but its margins "
                            f"still decrease (slopes {slopes})"
                        )

        logger.info(
            f"Admissibility: balance={bal:.6g}, {self.stats['passing']}/{len(audits)} inscribed "
            f"polygons pass, verdict={verdict.value}"
        )
        return AdmissibilityReport(
            balance=bal,
            verdict=verdict,
            inscribed=audits,
            tested_levels=tested,
            skipped_levels=skipped,
            simultaneous_levels=simultaneous,
            reasons=reasons,
            balance_tol=self.balance_tol,
            margin_tol=self.margin_tol,
        )


def check_admissible(
    poly: IdealPolygon,
    level_grid: Sequence[float],
    max_workers: Optional[int] = None,
) -> AdmissibilityReport:
    """
    Convenience function to certify admissibility.

    Args:
        poly: Ideal polygon to audit
        level_grid: Uniform truncation levels to search
        max_workers: Thread cap for margin evaluation

    Returns:
        AdmissibilityReport
    """
    checker = AdmissibilityChecker(max_workers=max_workers)
    return checker.check(poly, level_grid)


def binomial_count(n_vertices: int) -> int:
    """Expected number of inscribed polygons (full polygon included)."""
    return sum(math.comb(n_vertices, m) for m in range(3, n_vertices + 1))
