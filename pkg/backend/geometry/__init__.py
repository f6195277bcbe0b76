"""
Geometry Module - closed-form geometry of the Poincare disk.
"""

from .kernel import (
    DiskPoint,
    IdealPoint,
    Geodesic,
    Horocycle,
    CenterNotEndpoint,
    hyp_distance,
    busemann,
    geodesic_foot_on_horocycle,
    truncated_length,
    point_on_ray,
)

__all__ = [
    'DiskPoint',
    'IdealPoint',
    'Geodesic',
    'Horocycle',
    'CenterNotEndpoint',
    'hyp_distance',
    'busemann',
    'geodesic_foot_on_horocycle',
    'truncated_length',
    'point_on_ray',
]
