"""
Discrete Flux Module
Flux of X = grad u / W across edge chains of a mesh, defined through the
weak-form terms of the triangles on either side of the chain so that flux
over the boundary of any region telescopes into interior residuals.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from backend.exceptions import ScherkLabError
from backend.meshing.triangulation import TriangulatedDomain
from backend.solvers.area import GraphAreaFunctional
from backend.solvers.field import ScalarField

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class DisconnectedChain(ScherkLabError, ValueError):
    """Raised when a chain is not a path of mesh edges or an open chain ends off the boundary."""
    pass


class NotClosed(ScherkLabError, ValueError):
    """Raised when a cycle flux is requested for an open chain."""
    pass


@dataclass(frozen=True)
class Chain:
    """Ordered mesh vertices; a closed chain repeats its first vertex at the end."""

    vertices: tuple[int, ...]
    tag: str = ""

    @classmethod
    def from_tag(cls, mesh: TriangulatedDomain, tag: str) -> "Chain":
        return cls(tuple(mesh.chain(tag)), tag)

    @property
    def closed(self) -> bool:
        return len(self.vertices) > 3 and self.vertices[0] == self.vertices[-1]

    def reversed(self) -> "Chain":
        return Chain(tuple(reversed(self.vertices)), self.tag)

    def __add__(self, other: "Chain") -> "Chain":
        if self.vertices[-1] != other.vertices[0]:
            raise DisconnectedChain("chains do not share an endpoint")
        return Chain(self.vertices + other.vertices[1:], f"{self.tag}+{other.tag}")


class FluxEvaluator:
    """Chain fluxes of one field; element terms and incidence are computed once."""

    def __init__(self, field: ScalarField):
        self.field = field
        self.mesh = field.mesh
        self.terms = GraphAreaFunctional(self.mesh).element_fluxes(field.values)

    @cached_property
    def _incidence(self) -> tuple[np.ndarray, np.ndarray]:
        flat = self.mesh.triangles.ravel()
        order = np.argsort(flat, kind="stable")
        starts = np.searchsorted(flat[order], np.arange(self.mesh.n_vertices + 1))
        return order, starts

    @cached_property
    def _edge_set(self) -> set[tuple[int, int]]:
        return {tuple(e) for e in self.mesh.edges.tolist()}

    @cached_property
    def _boundary_links(self) -> tuple[dict[int, int], dict[int, int]]:
        succ = {int(a): int(b) for a, b in self.mesh.boundary_edges}
        pred = {b: a for a, b in succ.items()}
        return pred, succ

    def _fans(self, i: int, prev: int, nxt: int) -> tuple[float, float, int, int]:
        """Sums of the weak-form terms of vertex i over the left and right fans."""
        z = self.mesh.z
        order, starts = self._incidence
        slots = order[starts[i]:starts[i + 1]]
        tris, local = np.divmod(slots, 3)
        d_next = np.angle(z[nxt] - z[i])
        span = np.mod(np.angle(z[prev] - z[i]) - d_next, TWO_PI)
        others = self.mesh.triangles[tris]
        rel = z[others] - z[i]
        rel[np.arange(len(tris)), local] = 0.0
        mag = np.abs(rel)
        bisector = np.sum(np.divide(rel, mag, out=np.zeros_like(rel), where=mag > 0), axis=1)
        ang = np.mod(np.angle(bisector) - d_next, TWO_PI)
        left = ang < span
        values = self.terms[tris, local]
        return float(np.sum(values[left])), float(np.sum(values[~left])), int(left.sum()), int((~left).sum())

    def vertex_term(self, i: int, prev: int, nxt: int) -> float:
        f_left, f_right, n_left, n_right = self._fans(i, prev, nxt)
        if n_left and n_right:
            return 0.5 * (f_left - f_right)
        return f_left if n_left else -f_right

    def _check(self, chain: Chain):
        v = chain.vertices
        if len(v) < 2:
            raise DisconnectedChain(f"chain '{chain.tag}' needs at least two vertices")
        for a, b in zip(v, v[1:]):
            if (min(a, b), max(a, b)) not in self._edge_set:
                raise DisconnectedChain(f"chain '{chain.tag}' jumps from vertex {a} to {b} without a mesh edge")

    def chain_flux(self, chain: Chain, orientation: int = 1) -> float:
        """
        Flux across the chain; orientation +1 uses the conormal on the right of travel.

        Raises:
            DisconnectedChain: If the chain is not an edge path or an open chain ends inside
        """
        if orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {orientation}")
        self._check(chain)
        v = list(chain.vertices)
        total = 0.0
        if chain.closed:
            ring = v[:-1]
            m = len(ring)
            for k in range(m):
                total += self.vertex_term(ring[k], ring[k - 1], ring[(k + 1) % m])
            return orientation * total

        pred, succ = self._boundary_links
        for end in (v[0], v[-1]):
            if end not in succ:
                raise DisconnectedChain(f"open chain '{chain.tag}' ends at interior vertex {end}")
        last = len(v) - 1
        for k, i in enumerate(v):
            prev = v[k - 1] if k > 0 else pred[i]
            nxt = v[k + 1] if k < last else succ[i]
            weight = 0.5 if k in (0, last) else 1.0
            total += weight * self.vertex_term(i, prev, nxt)
        return orientation * total


def flux_on_chain(field: ScalarField, chain: "Chain | Sequence[int]", orientation: int = 1) -> float:
    """Discrete flux of grad u / W across an edge chain."""
    if not isinstance(chain, Chain):
        chain = Chain(tuple(int(i) for i in chain))
    return FluxEvaluator(field).chain_flux(chain, orientation)


def flux_cycle_check(field: ScalarField, cycle: "Chain | Sequence[int]") -> float:
    """
    Flux across a closed chain; vanishes up to residuals for discrete solutions.

    Raises:
        NotClosed: If the chain does not return to its first vertex
    """
    if not isinstance(cycle, Chain):
        cycle = Chain(tuple(int(i) for i in cycle))
    if not cycle.closed:
        raise NotClosed(f"chain '{cycle.tag}' is not closed")
    return FluxEvaluator(field).chain_flux(cycle)
