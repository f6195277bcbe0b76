"""
Loaders Module - polygon spec, mesh and field file parsing.
"""

from .polygon_loader import (
    PolygonSpec,
    PolygonSpecError,
    load_polygon_spec,
    parse_polygon_spec,
)
from .mesh_loader import (
    MeshFormatError,
    parse_mesh,
    read_field,
    read_mesh,
)

__all__ = [
    'PolygonSpec',
    'PolygonSpecError',
    'load_polygon_spec',
    'parse_polygon_spec',
    'MeshFormatError',
    'parse_mesh',
    'read_field',
    'read_mesh',
]
