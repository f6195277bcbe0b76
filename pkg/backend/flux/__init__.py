"""
Flux Module - discrete flux of grad u / W and the flux audits.
"""

from .discrete_flux import (
    Chain,
    DisconnectedChain,
    FluxEvaluator,
    NotClosed,
    flux_cycle_check,
    flux_on_chain,
)
from .flux_validator import (
    ArcFlux,
    BoundaryMismatch,
    ComparisonWitness,
    FluxAuditFailed,
    FluxReport,
    FluxTheoremValidator,
    NotASolution,
    NotOrdered,
    arc_kind,
    flux_compare,
    flux_theorem_audit,
)

__all__ = [
    'Chain',
    'DisconnectedChain',
    'FluxEvaluator',
    'NotClosed',
    'flux_cycle_check',
    'flux_on_chain',
    'ArcFlux',
    'BoundaryMismatch',
    'ComparisonWitness',
    'FluxAuditFailed',
    'FluxReport',
    'FluxTheoremValidator',
    'NotASolution',
    'NotOrdered',
    'arc_kind',
    'flux_compare',
    'flux_theorem_audit',
]
