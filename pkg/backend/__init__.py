"""
Scherk Lab - Backend
Numerical laboratory for ideal Scherk minimal graphs over ideal polygons
in the hyperbolic plane.
"""

__version__ = "0.1.0"
