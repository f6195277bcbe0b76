"""
Graph Area Module
The discrete area of a vertical graph over a triangulated disk domain, with
its gradient and Hessian in the nodal values.

For the product metric lambda^2 |dz|^2 + dt^2 the area element of the graph
of u is lambda * sqrt(lambda^2 + |grad u|^2) dx dy, grad taken in model
coordinates. On P1 elements grad u is constant per triangle; the conformal
factor is sampled at the three edge midpoints.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from backend.meshing.triangulation import TriangulatedDomain
from .field import ScalarField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphArea:
    """Area of a graph surface and of the domain beneath it (hyperbolic units squared)."""

    value: float
    domain_area: float

    @property
    def excess(self) -> float:
        return self.value - self.domain_area


class GraphAreaFunctional:
    """
    E(u) = sum_T A_T * mean_q[lambda_q * sqrt(lambda_q^2 + |p_T|^2)].

    All per-element work is vectorized; reductions use bincount and COO
    summation, whose order does not depend on threading.
    """

    def __init__(self, mesh: TriangulatedDomain):
        self.mesh = mesh
        geom = mesh.element_geometry
        self.areas = geom.areas
        self.grads = geom.grads
        self.lam = geom.lam
        self.triangles = mesh.triangles
        self._rows = np.repeat(self.triangles, 3, axis=1).ravel()
        self._cols = np.tile(self.triangles, (1, 3)).ravel()

    def _as_values(self, u) -> np.ndarray:
        if isinstance(u, ScalarField):
            u = u.values
        u = np.asarray(u, dtype=float)
        if u.shape != (self.mesh.n_vertices,):
            raise ValueError(f"expected {self.mesh.n_vertices} nodal values, got shape {u.shape}")
        return u

    def slopes(self, u) -> np.ndarray:
        """Constant Euclidean gradient p_T of u on each triangle, shape (nt, 2)."""
        u = self._as_values(u)
        return np.einsum("ta,tad->td", u[self.triangles], self.grads)

    def _speeds(self, p: np.ndarray) -> np.ndarray:
        return np.sqrt(self.lam ** 2 + np.sum(p ** 2, axis=1)[:, None])

    def energy(self, u) -> float:
        s = self._speeds(self.slopes(u))
        return float(np.sum(self.areas * np.mean(self.lam * s, axis=1)))

    def domain_area(self) -> float:
        return float(np.sum(self.areas * np.mean(self.lam ** 2, axis=1)))

    def conormal_weights(self, u) -> np.ndarray:
        """kappa_T = mean_q(lambda_q / s_q); X_T = kappa_T * p_T is the discrete grad u / W."""
        s = self._speeds(self.slopes(u))
        return np.mean(self.lam / s, axis=1)

    def element_fluxes(self, u) -> np.ndarray:
        """c[T, a] = A_T * kappa_T * p_T . grad phi_a, the weak-form terms of each element."""
        p = self.slopes(u)
        kappa = np.mean(self.lam / self._speeds(p), axis=1)
        return (self.areas * kappa)[:, None] * np.einsum("td,tad->ta", p, self.grads)

    def gradient(self, u) -> np.ndarray:
        c = self.element_fluxes(u)
        return np.bincount(self.triangles.ravel(), weights=c.ravel(), minlength=self.mesh.n_vertices)

    def hessian(self, u) -> sp.csr_matrix:
        p = self.slopes(u)
        s = self._speeds(p)
        a = np.mean(self.lam / s, axis=1)
        b = np.mean(self.lam / s ** 3, axis=1)
        # H_T = A_T * (a I - b p p^T), symmetric positive definite per element
        gp = np.einsum("tad,td->ta", self.grads, p)
        gg = np.einsum("tad,tbd->tab", self.grads, self.grads)
        ke = self.areas[:, None, None] * (a[:, None, None] * gg - b[:, None, None] * gp[:, :, None] * gp[:, None, :])
        n = self.mesh.n_vertices
        return sp.coo_matrix((ke.ravel(), (self._rows, self._cols)), shape=(n, n)).tocsr()


def laplace_matrix(mesh: TriangulatedDomain) -> sp.csr_matrix:
    """P1 stiffness of the Dirichlet energy; conformally invariant in two dimensions."""
    geom = mesh.element_geometry
    tris = mesh.triangles
    ke = geom.areas[:, None, None] * np.einsum("tad,tbd->tab", geom.grads, geom.grads)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def graph_area(field: ScalarField) -> GraphArea:
    """Discrete area of the graph of field over its mesh."""
    functional = GraphAreaFunctional(field.mesh)
    return GraphArea(value=functional.energy(field.values), domain_area=functional.domain_area())
