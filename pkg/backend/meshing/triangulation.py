"""
Triangulation Module
Conforming triangulations of horocycle-truncated ideal polygons and of
exhaustion annuli, with tagged boundary chains, constrained interface chains
and cached P1 element geometry.

Boundary curves are sampled at hyperbolic spacing <= the local target length;
interior points come from a quadtree graded by the conformal factor. The mesh
is the constrained Delaunay triangulation of those points (Triangle, no
Steiner points), so every boundary sample keeps its index and tag.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import triangle
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from backend.exceptions import ScherkLabError
from backend.geometry.kernel import (
    DiskPoint,
    busemann_array,
    conformal_factor,
    convex_polygon_contains,
    distance_array,
    geodesic_foot_on_horocycle,
    geodesic_points,
    horocycle_arc_length,
    horocycle_arc_points,
    to_klein,
)
from backend.polygons.ideal_polygon import (
    IdealPolygon,
    TruncationScheme,
    chord_length,
    validate_truncation,
)
from .domains import ExhaustionDomain, check_nested, default_basepoint

logger = logging.getLogger(__name__)

CUT_TAG = "cut"
MAX_QUADTREE_DEPTH = 24
CHAIN_CLEARANCE = 0.6
JITTER = 0.1
_QUADRANTS = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])


class MeshGenerationError(ScherkLabError):
    """Raised when a domain cannot be triangulated consistently."""
    pass


@dataclass(frozen=True)
class MeshParams:
    """Target hyperbolic edge length and grading toward the outer boundary."""

    target_edge_length: float = 0.1
    grading: float = 1.0

    def __post_init__(self):
        if not (self.target_edge_length > 0 and math.isfinite(self.target_edge_length)):
            raise ValueError(f"target_edge_length must be positive, got {self.target_edge_length}")
        if not self.grading >= 1.0:
            raise ValueError(f"grading must be >= 1, got {self.grading}")

    def local_target(self, fraction):
        """Hyperbolic target at relative distance fraction in [0, 1] from the basepoint."""
        return self.target_edge_length / self.grading ** np.clip(fraction, 0.0, 1.0)

    @classmethod
    def from_dict(cls, data: dict) -> "MeshParams":
        return cls(float(data.get("target_edge_length", 0.1)), float(data.get("grading", 1.0)))

    def to_dict(self) -> dict:
        return {"target_edge_length": self.target_edge_length, "grading": self.grading}


def _orient_tris_ccw(xy: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Ensure counter-clockwise orientation and drop zero-area triangles."""
    if tris.size == 0:
        return tris
    a, b, c = xy[tris[:, 0]], xy[tris[:, 1]], xy[tris[:, 2]]
    two_area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    flip = two_area < 0.0
    if np.any(flip):
        tris = tris.copy()
        tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris[np.abs(two_area) > 1e-300]


def _half_edges(tris: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Oriented half-edges of ccw triangles with the unique undirected keys they map to."""
    he = tris[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    keys = np.sort(he, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    return he, uniq, inverse.reshape(-1), counts


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _order_chain(edges: Sequence[tuple[int, int]], tag: str) -> list[int]:
    """Order oriented edges into one path; closed paths repeat their first vertex at the end."""
    nxt: dict[int, int] = {}
    incoming: set[int] = set()
    for a, b in edges:
        if a in nxt:
            raise MeshGenerationError(f"chain '{tag}' branches at vertex {a}")
        nxt[a] = b
        incoming.add(b)
    starts = sorted(a for a in nxt if a not in incoming)
    if len(starts) > 1:
        raise MeshGenerationError(f"chain '{tag}' has {len(starts)} pieces")
    start = starts[0] if starts else min(nxt)
    path = [start]
    while path[-1] in nxt and len(path) <= len(edges):
        path.append(nxt[path[-1]])
        if path[-1] == start:
            break
    if len(path) != len(edges) + 1:
        raise MeshGenerationError(f"chain '{tag}' is not a single connected path")
    return path


@dataclass(frozen=True)
class ElementGeometry:
    """Per-triangle P1 data: Euclidean areas, gradients of the hat functions and quadrature."""

    areas: np.ndarray         # (nt,)
    grads: np.ndarray         # (nt, 3, 2)
    quad_points: np.ndarray   # (nt, 3) complex, edge midpoints
    lam: np.ndarray           # (nt, 3) conformal factor at the quadrature points


class TriangulatedDomain:
    """
    Triangle mesh of a compact subdomain of the disk.

    Boundary edges are stored oriented with the domain on their left, each with
    a component tag. Interface edges are interior constraint edges with tags.
    """

    def __init__(
        self,
        xy: np.ndarray,
        triangles: np.ndarray,
        boundary_edges: np.ndarray,
        boundary_tags: Sequence[str],
        interface_edges: Optional[np.ndarray] = None,
        interface_tags: Sequence[str] = (),
        chain_lengths: Optional[dict[str, float]] = None,
        metadata: Optional[dict[str, str]] = None,
        parent_vertices: Optional[np.ndarray] = None,
    ):
        self.xy = np.ascontiguousarray(xy, dtype=float).reshape(-1, 2)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_tags = [str(t) for t in boundary_tags]
        if interface_edges is None:
            interface_edges = np.zeros((0, 2), dtype=np.int64)
        self.interface_edges = np.ascontiguousarray(interface_edges, dtype=np.int64).reshape(-1, 2)
        self.interface_tags = [str(t) for t in interface_tags]
        self.chain_lengths = dict(chain_lengths or {})
        self.metadata = dict(metadata or {})
        self.parent_vertices = parent_vertices
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise MeshGenerationError("every boundary edge needs exactly one tag")
        if len(self.interface_tags) != len(self.interface_edges):
            raise MeshGenerationError("every interface edge needs exactly one tag")

    @classmethod
    def from_triangles(
        cls,
        xy: np.ndarray,
        triangles: np.ndarray,
        edge_tags: dict[tuple[int, int], str],
        interface_tags: dict[tuple[int, int], str],
        **kwargs,
    ) -> "TriangulatedDomain":
        """
        Derive oriented, tagged boundary edges from the triangles.

        Args:
            edge_tags: Tags of boundary candidates, keyed by sorted vertex pair
            interface_tags: Tags of interface edges, keyed by oriented vertex pair;
                edges not interior to the triangulation are dropped

        Raises:
            MeshGenerationError: If a boundary edge carries no tag
        """
        tris = _orient_tris_ccw(np.asarray(xy, dtype=float), np.asarray(triangles, dtype=np.int64))
        he, uniq, inverse, counts = _half_edges(tris)
        on_boundary = counts[inverse] == 1
        edges = he[on_boundary]
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        tags = []
        for a, b in edges:
            tag = edge_tags.get(_edge_key(int(a), int(b)))
            if tag is None:
                raise MeshGenerationError(f"boundary edge ({a}, {b}) carries no tag")
            tags.append(tag)
        interior = {tuple(k) for k in uniq[counts == 2].tolist()}
        iface = sorted(k for k in interface_tags if _edge_key(*k) in interior)
        iface_edges = np.array(iface, dtype=np.int64).reshape(-1, 2)
        return cls(xy, tris, edges, tags, iface_edges, [interface_tags[k] for k in iface], **kwargs)

    # ------------------------------------------------------------------
    # Basic accessors
    # ------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.xy)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def z(self) -> np.ndarray:
        return self.xy[:, 0] + 1j * self.xy[:, 1]

    def vertex_points(self) -> list[DiskPoint]:
        return [DiskPoint(float(x), float(y)) for x, y in self.xy]

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted."""
        return _half_edges(self.triangles)[1]

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def tags(self) -> list[str]:
        return sorted(set(self.boundary_tags))

    def interfaces(self) -> list[str]:
        return sorted(set(self.interface_tags))

    def vertices_tagged(self, tag: str) -> np.ndarray:
        sel = [e for e, t in zip(self.boundary_edges, self.boundary_tags) if t == tag]
        sel += [e for e, t in zip(self.interface_edges, self.interface_tags) if t == tag]
        if not sel:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.array(sel))

    def chain(self, tag: str) -> list[int]:
        """
        Ordered vertex list of a tagged boundary or interface chain.

        Closed chains repeat their first vertex at the end.

        Raises:
            KeyError: If no edge carries the tag
        """
        edges = [(int(a), int(b)) for (a, b), t in zip(self.boundary_edges, self.boundary_tags) if t == tag]
        edges += [(int(a), int(b)) for (a, b), t in zip(self.interface_edges, self.interface_tags) if t == tag]
        if not edges:
            raise KeyError(f"no chain tagged '{tag}'")
        return _order_chain(edges, tag)

    def boundary_loops(self) -> list[list[int]]:
        """Closed boundary components, domain on the left, each starting at its smallest vertex."""
        nxt = {int(a): int(b) for a, b in self.boundary_edges}
        loops = []
        seen: set[int] = set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            while True:
                v = nxt.get(loop[-1])
                if v is None:
                    raise MeshGenerationError(f"boundary is not closed at vertex {loop[-1]}")
                loop.append(v)
                if v == start:
                    break
                if v in seen:
                    raise MeshGenerationError(f"boundary loops touch at vertex {v}")
                seen.add(v)
            loops.append(loop)
        return loops

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles).size
        return int(used - len(self.edges) + self.n_triangles)

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    @cached_property
    def element_geometry(self) -> ElementGeometry:
        p = self.xy[self.triangles]                     # (nt, 3, 2)
        e_next = np.roll(p, -1, axis=1) - p             # x_{i+1} - x_i
        two_area = e_next[:, 0, 0] * e_next[:, 1, 1] - e_next[:, 0, 1] * e_next[:, 1, 0]
        areas = 0.5 * two_area
        opposite = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)   # x_{i+2} - x_{i+1}
        grads = np.stack([-opposite[..., 1], opposite[..., 0]], axis=-1) / two_area[:, None, None]
        zt = self.z[self.triangles]
        quad = 0.5 * (zt + np.roll(zt, -1, axis=1))
        return ElementGeometry(areas=areas, grads=grads, quad_points=quad, lam=conformal_factor(quad))

    def hyperbolic_area(self) -> float:
        g = self.element_geometry
        return float(np.sum(g.areas * np.mean(g.lam ** 2, axis=1)))

    def chain_polyline_length(self, tag: str) -> float:
        idx = self.chain(tag)
        z = self.z[idx]
        return float(np.sum(distance_array(z[:-1], z[1:])))

    def nearest_vertex(self, z: complex) -> int:
        return int(np.argmin(distance_array(complex(z), self.z)))

    def check_conforming(self):
        """
        Raises:
            MeshGenerationError: On non-manifold edges, inverted triangles or vertices off the disk
        """
        counts = _half_edges(self.triangles)[3]
        if np.any(counts > 2):
            raise MeshGenerationError("an edge is shared by more than two triangles")
        if np.any(self.element_geometry.areas <= 0.0):
            raise MeshGenerationError("mesh has triangles with non-positive area")
        if np.any(np.abs(self.z) >= 1.0):
            raise MeshGenerationError("mesh has vertices outside the open unit disk")
        n_boundary_halfedges = int(np.sum(counts == 1))
        if n_boundary_halfedges != len(self.boundary_edges):
            raise MeshGenerationError("boundary edges do not match the triangulation")

    # ------------------------------------------------------------------
    # Sub-triangulations
    # ------------------------------------------------------------------

    def regions(self) -> np.ndarray:
        """Label of each triangle's component once interface edges are cut."""
        he, uniq, inverse, counts = _half_edges(self.triangles)
        tri_of_he = np.repeat(np.arange(self.n_triangles), 3)
        cut = {tuple(e) for e in np.sort(self.interface_edges, axis=1).tolist()}
        is_cut = np.array([tuple(k) in cut for k in uniq.tolist()], dtype=bool)
        rows, cols = [], []
        order = np.argsort(inverse, kind="stable")
        inv_sorted = inverse[order]
        pairs = np.flatnonzero((inv_sorted[1:] == inv_sorted[:-1]))
        for k in pairs:
            key = inv_sorted[k]
            if is_cut[key]:
                continue
            rows.append(tri_of_he[order[k]])
            cols.append(tri_of_he[order[k + 1]])
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_triangles, self.n_triangles))
        _, labels = connected_components(graph, directed=False)
        return labels

    def submesh(self, tri_mask: np.ndarray) -> "TriangulatedDomain":
        """
        Exact sub-triangulation on the selected triangles.

        New boundary edges inherit the parent's boundary or interface tag, or
        CUT_TAG. The result's parent_vertices maps its vertices to this mesh.
        """
        tri_mask = np.asarray(tri_mask, dtype=bool)
        tris = self.triangles[tri_mask]
        if len(tris) == 0:
            raise MeshGenerationError("submesh selection is empty")
        used = np.unique(tris)
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(len(used))

        parent_boundary = {_edge_key(int(a), int(b)): t for (a, b), t in zip(self.boundary_edges, self.boundary_tags)}
        parent_iface = {_edge_key(int(a), int(b)): t for (a, b), t in zip(self.interface_edges, self.interface_tags)}
        edge_tags = {}
        for a, b in _half_edges(tris)[1].tolist():
            tag = parent_boundary.get((a, b)) or parent_iface.get((a, b)) or CUT_TAG
            edge_tags[_edge_key(int(remap[a]), int(remap[b]))] = tag
        iface_tags = {
            (int(remap[a]), int(remap[b])): t
            for (a, b), t in zip(self.interface_edges, self.interface_tags)
            if remap[a] >= 0 and remap[b] >= 0
        }

        sub = TriangulatedDomain.from_triangles(
            self.xy[used], remap[tris], edge_tags, iface_tags,
            metadata=dict(self.metadata),
            parent_vertices=used,
        )
        present = set(sub.boundary_tags) | set(sub.interface_tags)
        sub.chain_lengths = {t: v for t, v in self.chain_lengths.items() if t in present}
        return sub

    def submesh_inside(self, domain: ExhaustionDomain) -> "TriangulatedDomain":
        """Union of the interface-bounded regions lying inside an exhaustion domain."""
        labels = self.regions()
        centroids = to_klein(self.z[self.triangles]).mean(axis=1)
        inside = convex_polygon_contains(domain.klein_corners, centroids)
        keep = np.zeros(self.n_triangles, dtype=bool)
        for label in np.unique(labels):
            sel = labels == label
            if np.mean(inside[sel]) > 0.5:
                keep |= sel
        sub = self.submesh(keep)
        sub.metadata["outer_radius"] = f"{domain.n:g}"
        return sub

    def summary(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "triangles": self.n_triangles,
            "boundary_edges": len(self.boundary_edges),
            "interface_edges": len(self.interface_edges),
            "tags": self.tags(),
            "hyperbolic_area": self.hyperbolic_area(),
        }


class _MeshBuilder:
    """Collects tagged boundary loops and interior points, then triangulates."""

    def __init__(self, params: MeshParams, basepoint: complex, anchors: np.ndarray):
        self.params = params
        self.basepoint = complex(basepoint)
        self.d_max = max(float(np.max(distance_array(self.basepoint, np.asarray(anchors)))), 1e-12)
        self.points: list[complex] = []
        self.segments: list[tuple[int, int]] = []
        self.edge_tags: dict[tuple[int, int], str] = {}
        self.interface_tags: dict[tuple[int, int], str] = {}
        self.holes: list[complex] = []

    def hyperbolic_target(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.params.grading == 1.0:
            return np.full(z.shape, self.params.target_edge_length)
        return self.params.local_target(distance_array(self.basepoint, z) / self.d_max)

    def euclidean_target(self, z, r=None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        r = np.abs(z) if r is None else r
        # cells straddling the unit circle are graded at their innermost point
        z_in = z * np.minimum(1.0, (1.0 - 1e-9) / np.maximum(np.abs(z), 1e-300))
        return self.hyperbolic_target(z_in) * 0.5 * (1.0 - r ** 2)

    def _count(self, length: float, p: complex, q: complex) -> int:
        h = float(np.min(self.hyperbolic_target(np.array([p, q]))))
        return max(1, math.ceil(length / h - 1e-9))

    def geodesic_piece(self, tag: str, p: complex, q: complex) -> tuple[str, np.ndarray]:
        length = float(distance_array(p, q))
        return tag, geodesic_points(p, q, self._count(length, p, q))

    def horocycle_piece(self, tag: str, h, p: complex, q: complex) -> tuple[str, np.ndarray]:
        length = horocycle_arc_length(h, p, q)
        return tag, horocycle_arc_points(h, p, q, self._count(length, p, q))

    def add_loop(self, pieces: Sequence[tuple[str, np.ndarray]], interface: bool = False):
        """Register a closed loop made of consecutive pieces that share endpoints."""
        pts: list[complex] = []
        tags: list[str] = []
        for tag, samples in pieces:
            pts.extend(complex(p) for p in samples[:-1])
            tags.extend([tag] * (len(samples) - 1))
        base = len(self.points)
        m = len(pts)
        self.points.extend(pts)
        for k in range(m):
            a, b = base + k, base + (k + 1) % m
            self.segments.append((a, b))
            if interface:
                self.interface_tags[(a, b)] = tags[k]
            else:
                self.edge_tags[_edge_key(a, b)] = tags[k]

    def interior_points(self, inside: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        chain = np.array(self.points)
        tree = cKDTree(np.column_stack([chain.real, chain.imag]))
        centers = np.array([0j])
        half = 1.0
        leaves, leaf_half = [], []
        for _ in range(MAX_QUADTREE_DEPTH):
            probe = np.concatenate([centers[:, None], centers[:, None] + half * _QUADRANTS], axis=1)
            hit = inside(probe.ravel()).reshape(probe.shape).any(axis=1)
            near = tree.query(np.column_stack([centers.real, centers.imag]))[0] <= half * math.sqrt(2.0)
            centers = centers[hit | near]
            r = np.abs(centers)
            r_eff = np.where(r < 1.0, r, np.maximum(r - half * math.sqrt(2.0), 0.0))
            done = 2.0 * half <= self.euclidean_target(centers, r_eff)
            leaves.append(centers[done])
            leaf_half.append(np.full(int(done.sum()), half))
            centers = centers[~done]
            if centers.size == 0:
                break
            half *= 0.5
            centers = (centers[:, None] + half * _QUADRANTS).ravel()
        else:
            raise MeshGenerationError("quadtree refinement did not terminate; domain reaches too close to the ideal boundary")

        pts = np.concatenate(leaves)
        halves = np.concatenate(leaf_half)
        keep = inside(pts)
        pts, halves = pts[keep], halves[keep]

        # rotation-equivariant tangential jitter against co-circular point sets
        r = np.abs(pts)
        tangent = 1j * pts / np.where(r > 0.0, r, 1.0)
        pts = pts + JITTER * halves * np.sin(997.0 * r * r) * tangent

        if inside(np.array([0j]))[0]:
            clear = np.abs(pts) >= CHAIN_CLEARANCE * self.euclidean_target(pts)
            pts = np.concatenate([[0j], pts[clear]])

        keep = inside(pts)
        dist = tree.query(np.column_stack([pts.real, pts.imag]))[0]
        keep &= dist >= CHAIN_CLEARANCE * self.euclidean_target(pts)
        return pts[keep]

    def triangulate(self, inside: Callable[[np.ndarray], np.ndarray], **kwargs) -> TriangulatedDomain:
        interior = self.interior_points(inside)
        pts = np.concatenate([np.array(self.points), interior])
        xy = np.column_stack([pts.real, pts.imag])
        data = {"vertices": xy, "segments": np.array(self.segments, dtype=np.int32)}
        if self.holes:
            data["holes"] = np.array([[h.real, h.imag] for h in self.holes])
        out = triangle.triangulate(data, "pQ")
        if len(out["vertices"]) != len(xy):
            raise MeshGenerationError(
                f"triangulation inserted {len(out['vertices']) - len(xy)} Steiner points; boundary chains intersect"
            )
        tris = np.asarray(out["triangles"], dtype=np.int64)
        if np.unique(tris).size != len(xy):
            raise MeshGenerationError("some mesh points are not covered by the triangulation")
        mesh = TriangulatedDomain.from_triangles(xy, tris, self.edge_tags, self.interface_tags, **kwargs)
        mesh.check_conforming()
        logger.info(
            f"Meshed {mesh.metadata.get('kind', 'domain')}: {mesh.n_vertices} vertices, "
            f"{mesh.n_triangles} triangles, {len(self.points)} chain samples"
        )
        return mesh


def _basepoint_metadata(basepoint: DiskPoint) -> dict[str, str]:
    return {"basepoint_x": repr(basepoint.x), "basepoint_y": repr(basepoint.y)}


def build_truncated_polygon(
    poly: IdealPolygon,
    trunc: TruncationScheme,
    params: MeshParams,
    basepoint: Optional[DiskPoint] = None,
) -> TriangulatedDomain:
    """
    Mesh the ideal polygon minus the open horoballs of trunc.

    Boundary chains are tagged alpha<j>/beta<j> (truncated sides) and c<i>
    (horocyclic arc at vertex i, 1-based).

    Raises:
        DisjointnessViolated: If trunc is not valid for poly
        MeshGenerationError: If triangulation fails
    """
    validate_truncation(poly, trunc)
    basepoint = basepoint or default_basepoint(poly)
    n = poly.n_vertices
    horocycles = [trunc.horocycle(poly, i) for i in range(n)]
    starts, ends = [], []
    for i in range(n):
        g = poly.geodesic(i, i + 1)
        starts.append(geodesic_foot_on_horocycle(g, horocycles[i]).z)
        ends.append(geodesic_foot_on_horocycle(g, horocycles[(i + 1) % n]).z)

    builder = _MeshBuilder(params, basepoint.z, np.array(starts + ends))
    pieces = []
    chain_lengths = {}
    for i in range(n):
        j = (i + 1) % n
        tag = poly.edge_tag(i)
        pieces.append(builder.geodesic_piece(tag, starts[i], ends[i]))
        pieces.append(builder.horocycle_piece(f"c{j + 1}", horocycles[j], ends[i], starts[j]))
        chain_lengths[tag] = chord_length(poly, trunc, i, j)
        chain_lengths[f"c{j + 1}"] = horocycle_arc_length(horocycles[j], ends[i], starts[j])
    builder.add_loop(pieces)

    xis = poly.ideal_points
    levels = np.array(trunc.levels)

    def inside(z: np.ndarray) -> np.ndarray:
        ok = convex_polygon_contains(xis, to_klein(z))
        with np.errstate(divide="ignore", invalid="ignore"):
            for xi, s in zip(xis, levels):
                ok &= busemann_array(xi, z) > s
        return ok & (np.abs(z) < 1.0)

    metadata = {
        "kind": "truncated",
        "level": repr(float(min(trunc.levels))),
        "target_edge_length": repr(params.target_edge_length),
        "levels": ",".join(repr(s) for s in trunc.levels),
        **_basepoint_metadata(basepoint),
    }
    return builder.triangulate(inside, chain_lengths=chain_lengths, metadata=metadata)


def build_annulus(
    outer: ExhaustionDomain,
    inner: ExhaustionDomain,
    params: MeshParams,
    interfaces: Sequence[ExhaustionDomain] = (),
) -> TriangulatedDomain:
    """
    Mesh the closed annulus between two nested exhaustion domains.

    Boundary chains are tagged gamma<n> after their radius; the boundaries of
    intermediate domains are embedded as constrained interface chains.

    Raises:
        NotNested: If the domains are not strictly nested around one basepoint
    """
    check_nested(inner, outer)
    for mid in interfaces:
        check_nested(inner, mid)
        check_nested(mid, outer)
    interfaces = sorted(interfaces, key=lambda d: d.n)

    builder = _MeshBuilder(params, inner.basepoint.z, outer.corners)
    builder.add_loop([builder.geodesic_piece(outer.tag, p, q) for p, q in outer.sides()])
    builder.add_loop([builder.geodesic_piece(inner.tag, p, q) for p, q in inner.sides()])
    builder.holes.append(inner.basepoint.z)
    for mid in interfaces:
        builder.add_loop([builder.geodesic_piece(mid.tag, p, q) for p, q in mid.sides()], interface=True)

    def inside(z: np.ndarray) -> np.ndarray:
        return outer.contains(z) & ~inner.contains(z) & (np.abs(z) < 1.0)

    chain_lengths = {d.tag: d.boundary_length() for d in (inner, outer, *interfaces)}
    metadata = {
        "kind": "annulus",
        "inner_radius": f"{inner.n:g}",
        "outer_radius": f"{outer.n:g}",
        "target_edge_length": repr(params.target_edge_length),
        "interfaces": ",".join(f"{d.n:g}" for d in interfaces),
        **_basepoint_metadata(inner.basepoint),
    }
    return builder.triangulate(inside, chain_lengths=chain_lengths, metadata=metadata)
