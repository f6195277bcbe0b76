"""
Polygons Module - ideal polygons, truncations and admissibility.
"""

from .ideal_polygon import (
    IdealPolygon,
    TruncationScheme,
    EdgeLabel,
    InvalidPolygon,
    DisjointnessViolated,
    chord_length,
    edge_lengths,
    balance,
    intrinsic_balance,
    perimeter,
    is_valid_truncation,
    validate_truncation,
)
from .admissibility import (
    InscribedPolygon,
    EdgeKind,
    Verdict,
    InscribedAudit,
    AdmissibilityReport,
    AdmissibilityChecker,
    EmptyGrid,
    enumerate_inscribed,
    inscribed_margins,
    margin_slopes,
    check_admissible,
)

__all__ = [
    'IdealPolygon',
    'TruncationScheme',
    'EdgeLabel',
    'InvalidPolygon',
    'DisjointnessViolated',
    'chord_length',
    'edge_lengths',
    'balance',
    'intrinsic_balance',
    'perimeter',
    'is_valid_truncation',
    'validate_truncation',
    'InscribedPolygon',
    'EdgeKind',
    'Verdict',
    'InscribedAudit',
    'AdmissibilityReport',
    'AdmissibilityChecker',
    'EmptyGrid',
    'enumerate_inscribed',
    'inscribed_margins',
    'margin_slopes',
    'check_admissible',
]
