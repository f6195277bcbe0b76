"""
Scalar Field Module
Per-vertex heights over a triangulated domain.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from backend.meshing.triangulation import TriangulatedDomain


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite height per mesh vertex, in mesh vertex order."""

    mesh: TriangulatedDomain
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(values) != self.mesh.n_vertices:
            raise ValueError(
                f"field has {len(values)} values but the mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def shifted(self, c: float) -> "ScalarField":
        return ScalarField(self.mesh, self.values + c, dict(self.info))

    def boundary_values(self) -> np.ndarray:
        """Values with NaN at interior vertices, the layout solve_dirichlet accepts."""
        out = np.full(self.mesh.n_vertices, np.nan)
        b = self.mesh.boundary_vertices
        out[b] = self.values[b]
        return out

    def restrict(self, sub: TriangulatedDomain) -> "ScalarField":
        """Field on a submesh extracted from this field's mesh."""
        if sub.parent_vertices is None:
            raise ValueError("mesh is not a submesh; it has no parent vertex map")
        return ScalarField(sub, self.values[sub.parent_vertices])

    def sup_difference(self, other: "ScalarField", vertices: Optional[np.ndarray] = None) -> float:
        if other.mesh is not self.mesh and other.mesh.n_vertices != self.mesh.n_vertices:
            raise ValueError("fields live on different meshes")
        diff = np.abs(self.values - other.values)
        if vertices is not None:
            diff = diff[vertices]
        return float(np.max(diff)) if len(diff) else 0.0
