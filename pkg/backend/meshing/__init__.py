"""
Meshing Module - exhaustion domains and tagged triangulations.
"""

from .domains import (
    ExhaustionDomain,
    NonConvex,
    NotNested,
    NotDecreasing,
    build_exhaustion,
    check_nested,
    default_basepoint,
    nested_truncations,
    truncation_covers,
)
from .triangulation import (
    CUT_TAG,
    MeshParams,
    TriangulatedDomain,
    MeshGenerationError,
    build_annulus,
    build_truncated_polygon,
)

__all__ = [
    'ExhaustionDomain',
    'NonConvex',
    'NotNested',
    'NotDecreasing',
    'build_exhaustion',
    'check_nested',
    'default_basepoint',
    'nested_truncations',
    'truncation_covers',
    'CUT_TAG',
    'MeshParams',
    'TriangulatedDomain',
    'MeshGenerationError',
    'build_annulus',
    'build_truncated_polygon',
]
