"""Structured triangulations of the unit square with edge connectivity.

All connectivity lives in flat numpy arrays. Conventions:

* element vertices are counterclockwise; local edge ``i`` is opposite
  local vertex ``i`` and runs from vertex ``(i+1) % 3`` to ``(i+2) % 3``;
* an edge stores its vertices in ascending id order, its elements in
  ascending id order (``-1`` marks the missing neighbour on the boundary);
* the edge normal points from the lower-id element into the higher-id one,
  or outward on the boundary, and the tangent is the normal rotated by +90
  degrees;
* ``signs[K, i]`` is +1 when the edge normal is the outward normal of ``K``.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

PATTERNS = ("right", "left", "alternating")


class Vertex(NamedTuple):
    id: int
    x: float
    y: float


class Edge(NamedTuple):
    id: int
    vertices: tuple
    elements: tuple
    normal: np.ndarray
    tangent: np.ndarray
    length: float
    is_boundary: bool


class Element(NamedTuple):
    id: int
    vertices: tuple
    edges: tuple
    signs: tuple
    diameter: float
    area: float


@dataclass(frozen=True, eq=False)
class Mesh:
    points: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (T, 3) counterclockwise
    edges: np.ndarray  # (E, 2) ascending vertex ids
    edge_elements: np.ndarray  # (E, 2), -1 on the boundary
    element_edges: np.ndarray  # (T, 3), edge i opposite vertex i
    signs: np.ndarray  # (T, 3) in {+1, -1}
    normals: np.ndarray  # (E, 2)
    tangents: np.ndarray  # (E, 2)
    lengths: np.ndarray  # (E,)
    areas: np.ndarray  # (T,)
    diameters: np.ndarray  # (T,)
    level: int = 0
    _interior_index: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_elements(self):
        return len(self.triangles)

    @property
    def h(self):
        return float(self.diameters.max())

    @property
    def is_boundary(self):
        return self.edge_elements[:, 1] < 0

    @property
    def interior_edges(self):
        return np.flatnonzero(~self.is_boundary)

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.is_boundary)

    @property
    def interior_index(self):
        """Map edge id -> position among interior edges, -1 on the boundary."""
        return self._interior_index

    def vertex(self, i):
        x, y = self.points[i]
        return Vertex(int(i), float(x), float(y))

    def edge(self, i):
        return Edge(
            int(i),
            tuple(int(v) for v in self.edges[i]),
            tuple(int(k) for k in self.edge_elements[i] if k >= 0),
            self.normals[i].copy(),
            self.tangents[i].copy(),
            float(self.lengths[i]),
            bool(self.is_boundary[i]),
        )

    def element(self, i):
        return Element(
            int(i),
            tuple(int(v) for v in self.triangles[i]),
            tuple(int(e) for e in self.element_edges[i]),
            tuple(int(s) for s in self.signs[i]),
            float(self.diameters[i]),
            float(self.areas[i]),
        )

    def affine_maps(self):
        """Batched affine maps: ``B`` (T, 2, 2), ``b`` (T, 2), ``detB`` (T,)."""
        p = self.points[self.triangles]
        B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        detB = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
        return B, p[:, 0].copy(), detB

    def outward_normals(self):
        """Outward unit normals of every element edge from vertex geometry, (T, 3, 2)."""
        p = self.points[self.triangles]
        d = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
        n = np.stack([d[..., 1], -d[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def dump(self, path):
        """Write the ASCII debug format (``V E T`` header, then vertices, edges, elements)."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_vertices} {self.n_edges} {self.n_elements}\n")
            for i, (x, y) in enumerate(self.points.tolist()):
                fh.write(f"{i} {x!r} {y!r}\n")
            for i, ((v0, v1), (k0, k1)) in enumerate(zip(self.edges, self.edge_elements)):
                fh.write(f"{i} {v0} {v1} {k0} {k1}\n")
            for i, (v0, v1, v2) in enumerate(self.triangles):
                fh.write(f"{i} {v0} {v1} {v2}\n")


def affine_map(mesh, element):
    """Map of the reference triangle onto one element: ``x = B xhat + b``."""
    p = mesh.points[mesh.triangles[element]]
    B = np.column_stack([p[1] - p[0], p[2] - p[0]])
    detB = float(np.linalg.det(B))
    if not detB > 0.0:
        raise ValueError(f"element {element} is degenerate or clockwise (det B = {detB})")
    return B, p[0].copy(), detB


def from_triangles(points, triangles, level=0):
    """Build the full connectivity for a conforming triangulation."""
    points = np.asarray(points, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    p = points[triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(signed == 0.0):
        raise ValueError("degenerate (zero-area) triangle in input")
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    areas = np.abs(signed)

    T = len(triangles)
    local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: an edge is shared by more than two triangles")
    element_edges = inverse.reshape(T, 3)

    owner = np.repeat(np.arange(T), 3)
    order = np.lexsort((owner, inverse))
    E = len(edges)
    edge_elements = -np.ones((E, 2), dtype=np.int64)
    first = np.ones(len(order), dtype=bool)
    first[1:] = inverse[order][1:] != inverse[order][:-1]
    edge_elements[inverse[order][first], 0] = owner[order][first]
    edge_elements[inverse[order][~first], 1] = owner[order][~first]

    ev = points[edges]
    tang_raw = ev[:, 1] - ev[:, 0]
    lengths = np.linalg.norm(tang_raw, axis=1)

    # Outward normal of the first (lower-id) element on each edge.
    k0 = edge_elements[:, 0]
    which = np.argmax(element_edges[k0] == np.arange(E)[:, None], axis=1)
    tri = points[triangles[k0]]
    a = tri[np.arange(E), (which + 1) % 3]
    b = tri[np.arange(E), (which + 2) % 3]
    d = b - a
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    tangents = np.column_stack([-normals[:, 1], normals[:, 0]])

    signs = np.where(edge_elements[element_edges, 0] == np.arange(T)[:, None], 1, -1)

    diameters = np.linalg.norm(p[:, [1, 2, 0]] - p[:, [2, 0, 1]], axis=-1).max(axis=1)
    interior = edge_elements[:, 1] >= 0
    interior_index = -np.ones(E, dtype=np.int64)
    interior_index[interior] = np.arange(int(interior.sum()))

    arrays = [points, triangles, edges, edge_elements, element_edges, signs, normals, tangents, lengths, areas, diameters, interior_index]
    for arr in arrays:
        arr.setflags(write=False)
    return Mesh(
        points=points,
        triangles=triangles,
        edges=edges,
        edge_elements=edge_elements,
        element_edges=element_edges,
        signs=signs,
        normals=normals,
        tangents=tangents,
        lengths=lengths,
        areas=areas,
        diameters=diameters,
        level=level,
        _interior_index=interior_index,
    )


def generate_structured(n, pattern="right", level=0):
    """Split an ``n x n`` grid on the unit square into ``2 n^2`` triangles.

    ``pattern`` picks the cell diagonal: ``"right"`` joins (0,0)-(1,1) in
    every cell, ``"left"`` joins (1,0)-(0,1), ``"alternating"`` switches in a
    checkerboard.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need at least one subdivision per side, got n={n}")
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    points = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    if pattern == "right":
        rising = np.ones(n * n, dtype=bool)
    elif pattern == "left":
        rising = np.zeros(n * n, dtype=bool)
    else:
        rising = (i + j) % 2 == 0
    lower = np.where(rising[:, None], np.column_stack([v00, v10, v11]), np.column_stack([v00, v10, v01]))
    upper = np.where(rising[:, None], np.column_stack([v00, v11, v01]), np.column_stack([v10, v11, v01]))
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return from_triangles(points, triangles, level=level)


def refinement_sequence(levels, pattern="right"):
    """Meshes for levels ``1..levels`` (or an explicit iterable of levels), ``n = 2**level``."""
    if isinstance(levels, int):
        if levels < 1:
            raise ValueError(f"need at least one level, got {levels}")
        levels = range(1, levels + 1)
    return [generate_structured(2**lvl, pattern, level=lvl) for lvl in levels]
