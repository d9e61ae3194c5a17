"""
Structured triangulations of convex polygons and uniform red refinement.

A mesh stores its geometry as arrays (``points``, ``cells``, ``edges``) so
that the assembly code can work element-vectorized; the record types
``Vertex``, ``Triangle`` and ``BoundaryEdge`` are views built on demand.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from mongeampere.exceptions import MeshError

logger = logging.getLogger(__name__)

# local edge e joins local vertices LOCAL_EDGES[e]; CCW orientation
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True)
class Polygon:
    """Counterclockwise vertex list of a convex polygon."""
    vertices: tuple

    def __post_init__(self):
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise MeshError("polygon needs at least 3 vertices given as (x, y) pairs")
        edges = np.roll(pts, -1, axis=0) - pts
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.any(cross <= 0.0):
            raise MeshError(f"polygon {self.vertices} is not strictly convex and counterclockwise")

    @property
    def area(self) -> float:
        pts = np.asarray(self.vertices, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def contains(self, x, y, tol=1e-12):
        """Boolean mask of points inside the closed polygon."""
        pts = np.asarray(self.vertices, dtype=float)
        inside = np.ones(np.shape(x), dtype=bool)
        for a, b in zip(pts, np.roll(pts, -1, axis=0)):
            cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])
            inside &= cross >= -tol
        return inside


UNIT_SQUARE = Polygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Triangle:
    id: int
    vertices: tuple
    area: float


@dataclass(frozen=True)
class BoundaryEdge:
    triangle: int
    local_index: int
    endpoints: tuple
    normal: tuple
    length: float


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Conforming triangulation.

    points: (V, 2) vertex coordinates
    cells:  (T, 3) counterclockwise vertex ids
    edges:  (E, 2) global edges as (low id, high id), lexicographically sorted
    cell_edges: (T, 3) global edge id of local edge e = LOCAL_EDGES[e]
    """
    points: np.ndarray
    cells: np.ndarray
    polygon: Polygon = UNIT_SQUARE
    edges: np.ndarray = field(init=False, repr=False)
    cell_edges: np.ndarray = field(init=False, repr=False)
    boundary_edge_ids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        points = np.ascontiguousarray(self.points, dtype=float)
        cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        if np.any(self._signed_areas(points, cells) <= 0.0):
            raise MeshError("triangles must be counterclockwise with positive area")
        local = np.sort(cells[:, LOCAL_EDGES], axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two triangles")
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'cells', cells)
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, 'cell_edges', inverse.reshape(-1, 3))
        object.__setattr__(self, 'boundary_edge_ids', np.flatnonzero(counts == 1))

    @staticmethod
    def _signed_areas(points, cells):
        p0, p1, p2 = (points[cells[:, i]] for i in range(3))
        d1, d2 = p1 - p0, p2 - p0
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    # ---- sizes ----
    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # ---- geometry ----
    @cached_property
    def areas(self) -> np.ndarray:
        return self._signed_areas(self.points, self.cells)

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.points[self.cells]
        lengths = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)
        return lengths.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def shape_regularity(self) -> float:
        """min over triangles of inradius / diameter"""
        p = self.points[self.cells]
        perimeter = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2).sum(axis=1)
        inradius = 2.0 * self.areas / perimeter
        return float(np.min(inradius / self.diameters))

    @property
    def quasi_uniformity(self) -> float:
        return float(self.diameters.max() / self.diameters.min())

    @cached_property
    def jacobians(self) -> np.ndarray:
        """(T, 2, 2) affine maps x = p0 + J xhat of the reference triangle."""
        p = self.points[self.cells]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    @cached_property
    def boundary_cells(self) -> np.ndarray:
        """(B, 2) pairs (triangle id, local edge index) of the boundary edges."""
        is_boundary = np.zeros(self.n_edges, dtype=bool)
        is_boundary[self.boundary_edge_ids] = True
        cell_ids, local = np.nonzero(is_boundary[self.cell_edges])
        order = np.argsort(self.cell_edges[cell_ids, local], kind='stable')
        return np.stack([cell_ids[order], local[order]], axis=1)

    @cached_property
    def boundary_normals(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals (B, 2) and lengths (B,) aligned with ``boundary_cells``."""
        t, e = self.boundary_cells.T
        a = self.points[self.cells[t, LOCAL_EDGES[e, 0]]]
        b = self.points[self.cells[t, LOCAL_EDGES[e, 1]]]
        tangent = b - a
        length = np.linalg.norm(tangent, axis=1)
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / length[:, None]
        return normal, length

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edge_ids])

    @cached_property
    def corner_cells(self) -> np.ndarray:
        """Ids of the triangles with a vertex on a corner of the polygon."""
        corners = np.asarray(self.polygon.vertices, dtype=float)
        distance = np.linalg.norm(self.points[:, None, :] - corners[None, :, :], axis=2)
        at_corner = np.any(distance <= 1e-12 * max(1.0, np.abs(corners).max()), axis=1)
        return np.flatnonzero(at_corner[self.cells].any(axis=1))

    # ---- record views ----
    @property
    def vertices(self) -> list[Vertex]:
        return [Vertex(i, float(x), float(y)) for i, (x, y) in enumerate(self.points)]

    @property
    def triangles(self) -> list[Triangle]:
        return [Triangle(i, tuple(int(v) for v in c), float(a))
                for i, (c, a) in enumerate(zip(self.cells, self.areas))]

    @property
    def boundary_edges(self) -> list[BoundaryEdge]:
        normals, lengths = self.boundary_normals
        records = []
        for (t, e), n, length in zip(self.boundary_cells, normals, lengths):
            ends = tuple(int(self.cells[t, j]) for j in LOCAL_EDGES[e])
            records.append(BoundaryEdge(int(t), int(e), ends, (float(n[0]), float(n[1])), float(length)))
        return records

    def triangle(self, index: int) -> Triangle:
        if not 0 <= index < self.n_cells:
            raise IndexError(f"triangle {index} out of range [0, {self.n_cells})")
        return Triangle(index, tuple(int(v) for v in self.cells[index]), float(self.areas[index]))

    def validate(self):
        """Check conformity (Euler characteristic of a disk) and coverage."""
        euler = self.n_vertices - self.n_edges + self.n_cells
        if euler != 1:
            raise MeshError(f"mesh is not a conforming disk triangulation (V - E + T = {euler})")
        total = float(self.areas.sum())
        if abs(total - self.polygon.area) > 1e-12 * self.polygon.area:
            raise MeshError(f"triangles cover area {total!r}, polygon has {self.polygon.area!r}")
        if not np.all(self.polygon.contains(self.points[:, 0], self.points[:, 1])):
            raise MeshError("vertices outside the domain polygon")

    def summary(self) -> dict:
        return {
            'vertices': self.n_vertices,
            'triangles': self.n_cells,
            'edges': self.n_edges,
            'boundary_edges': len(self.boundary_edge_ids),
            'h': self.h,
            'shape_regularity': self.shape_regularity,
        }


def build_structured_mesh(n: int, polygon: Polygon | Sequence = UNIT_SQUARE) -> Mesh:
    """
    n x n grid of quadrilaterals, each split along the same diagonal.

    The unit square (default) gives h = sqrt(2)/n. Any other convex
    quadrilateral is handled as the bilinear image of the unit square grid:
    grid lines map to straight segments, so the triangles cover it exactly.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    if not isinstance(polygon, Polygon):
        polygon = Polygon(tuple(tuple(float(c) for c in p) for p in polygon))
    if len(polygon.vertices) != 4:
        raise MeshError("structured meshes are built on quadrilateral domains only")

    s = np.linspace(0.0, 1.0, n + 1)
    sx, sy = np.meshgrid(s, s, indexing='xy')
    sx, sy = sx.ravel(), sy.ravel()
    c = np.asarray(polygon.vertices, dtype=float)
    points = (np.outer((1 - sx) * (1 - sy), c[0]) + np.outer(sx * (1 - sy), c[1])
              + np.outer(sx * sy, c[2]) + np.outer((1 - sx) * sy, c[3]))
    if polygon == UNIT_SQUARE:
        points = np.stack([sx, sy], axis=1)

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing='xy')
    p00 = (j * (n + 1) + i).ravel()
    p10, p01 = p00 + 1, p00 + n + 1
    p11 = p01 + 1
    lower = np.stack([p00, p10, p11], axis=1)
    upper = np.stack([p00, p11, p01], axis=1)
    cells = np.stack([lower, upper], axis=1).reshape(-1, 3)

    mesh = Mesh(points, cells, polygon)
    logger.debug("structured mesh n=%d: %s", n, mesh.summary())
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Split every triangle into four congruent children through its edge midpoints."""
    V = mesh.n_vertices
    midpoints = 0.5 * (mesh.points[mesh.edges[:, 0]] + mesh.points[mesh.edges[:, 1]])
    points = np.vstack([mesh.points, midpoints])
    a, b, c = mesh.cells.T
    m_ab, m_bc, m_ca = (V + mesh.cell_edges[:, e] for e in range(3))
    children = np.stack([
        np.stack([a, m_ab, m_ca], axis=1),
        np.stack([m_ab, b, m_bc], axis=1),
        np.stack([m_ca, m_bc, c], axis=1),
        np.stack([m_ab, m_bc, m_ca], axis=1),
    ], axis=1).reshape(-1, 3)
    return Mesh(points, children, mesh.polygon)
