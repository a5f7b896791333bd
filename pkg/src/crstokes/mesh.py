"""Uniform triangulations of the unit square and their geometry.

Local numbering follows the usual convention: local edge ``i`` is opposite
local vertex ``i``, so ``h_i`` is the height from vertex ``i`` onto ``e_i`` and
``grad(psi_i) = -n_i / h_i``.  Each triangle's vertex triple is rotated so
that local edge 0 has the smallest direction angle (mod pi); on a uniform
mesh this makes the local numbering identical on every element, which keeps
per-local-edge constants element-invariant.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class ElementGeometry:
    area: float
    centroid: np.ndarray  # (2,)
    vertices: np.ndarray  # (3, 2)
    edge_lengths: np.ndarray  # (3,)
    normals: np.ndarray  # (3, 2) unit outward
    tangents: np.ndarray  # (3, 2) unit, normals rotated by +90 degrees
    midpoints: np.ndarray  # (3, 2)
    heights: np.ndarray  # (3,)
    grad_bary: np.ndarray  # (3, 2)


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Immutable triangulation with full edge adjacency.

    ``edge_tris[e]`` holds the adjacent triangles (smaller index first, -1
    padding for boundary edges).  ``tri_signs[K, i]`` is +1 when the canonical
    normal of global edge ``tri_edges[K, i]`` equals the outward normal of K,
    i.e. K is the first triangle of that edge.
    """

    level: int
    vertices: np.ndarray
    triangles: np.ndarray
    parent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        tris = _canonical_rotation(self.vertices, np.asarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "triangles", tris)
        p = self.vertices[tris]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(area2 <= 1e-14 * np.max(np.abs(area2), initial=1.0)):
            raise MeshError("degenerate or clockwise triangle in triangulation")
        for a in (self.vertices, self.triangles):
            a.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def _topology(self):
        tris = self.triangles
        nt = len(tris)
        # local edge i joins vertices (i+1, i+2)
        a = tris[:, [1, 2, 0]].ravel()
        b = tris[:, [2, 0, 1]].ravel()
        pairs = np.column_stack([np.minimum(a, b), np.maximum(a, b)])
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        tri_edges = inverse.reshape(nt, 3)
        owner = np.repeat(np.arange(nt), 3)
        order = np.lexsort((owner, inverse))
        counts = np.bincount(inverse, minlength=len(edges))
        if np.any(counts > 2):
            raise MeshError("non-manifold edge")
        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        edge_tris[:, 0] = owner[order[start]]
        two = counts == 2
        edge_tris[two, 1] = owner[order[start[two] + 1]]
        signs = np.where(edge_tris[tri_edges, 0] == np.arange(nt)[:, None], 1.0, -1.0)
        for arr in (edges, tri_edges, edge_tris, signs):
            arr.setflags(write=False)
        return edges, tri_edges, edge_tris, signs

    @property
    def edges(self):
        return self._topology[0]

    @property
    def tri_edges(self):
        return self._topology[1]

    @property
    def edge_tris(self):
        return self._topology[2]

    @property
    def tri_signs(self):
        return self._topology[3]

    @cached_property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    @cached_property
    def boundary_edge_flags(self):
        flags = self.edge_tris[:, 1] < 0
        flags.setflags(write=False)
        return flags

    @cached_property
    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @cached_property
    def h(self):
        return float(self.geo.edge_lengths.max())

    @cached_property
    def geo(self):
        """Vectorised element geometry (arrays with a leading triangle axis)."""
        return _Geometry(self.vertices[self.triangles])

    def to_json(self):
        return json.dumps(
            {
                "vertices": self.vertices.tolist(),
                "triangles": self.triangles.tolist(),
                "edges": self.edges.tolist(),
                "boundary_edges": self.boundary_edges.tolist(),
            }
        )


class _Geometry:
    def __init__(self, p):
        self.vertices = p  # (T, 3, 2)
        e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]  # edge i runs from vertex i+1 to i+2
        self.edge_lengths = np.linalg.norm(e, axis=2)
        self.tangents = e / self.edge_lengths[..., None]
        # CCW triangles: outward normal is the tangent rotated clockwise
        self.normals = np.stack([self.tangents[..., 1], -self.tangents[..., 0]], axis=-1)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        self.centroid = p.mean(axis=1)
        self.midpoints = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])
        self.heights = 2.0 * self.area[:, None] / self.edge_lengths
        self.grad_bary = -self.normals / self.heights[..., None]

    def points(self, bary):
        """Physical coordinates of barycentric points, shape (T, nq, 2)."""
        return np.einsum("qi,tid->tqd", bary, self.vertices)


def _canonical_rotation(vertices, tris):
    p = vertices[tris]
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
    ang = np.mod(np.arctan2(e[..., 1], e[..., 0]), np.pi)
    ang = np.where(ang > np.pi - 1e-9, 0.0, ang)
    # round so that parallel edges compare equal despite rounding noise
    first = np.argmin(np.round(ang, 9), axis=1)
    idx = (first[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(tris, idx, axis=1)


def build_uniform(level):
    """Uniform triangulation T_level of the unit square.

    T_1 is the square cut along the diagonal from (0, 0) to (1, 1); each
    further level is one red refinement.
    """
    if int(level) != level or level < 1:
        raise MeshError(f"level must be a positive integer, got {level!r}")
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    mesh = Triangulation(1, verts, tris)
    for _ in range(int(level) - 1):
        mesh = refine(mesh)
    return mesh


def refine(mesh):
    """Red refinement: split every triangle into four by its edge midpoints.

    Old vertices keep their indices, the midpoint of edge ``e`` becomes vertex
    ``n_vertices + e``; children of triangle ``K`` are ``4K .. 4K+3`` and
    ``parent[child] == K``.
    """
    nv = mesh.n_vertices
    verts = np.vstack([mesh.vertices, mesh.edge_midpoints])
    t = mesh.triangles
    m = nv + mesh.tri_edges  # m[:, i] is the midpoint opposite vertex i
    children = np.stack(
        [
            np.column_stack([t[:, 0], m[:, 2], m[:, 1]]),
            np.column_stack([m[:, 2], t[:, 1], m[:, 0]]),
            np.column_stack([m[:, 1], m[:, 0], t[:, 2]]),
            np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
        ],
        axis=1,
    ).reshape(-1, 3)
    parent = np.repeat(np.arange(mesh.n_triangles), 4)
    return Triangulation(mesh.level + 1, verts, children, parent)


def geometry(mesh, K):
    g = mesh.geo
    if not 0 <= K < mesh.n_triangles:
        raise IndexError(f"triangle index {K} out of range")
    return ElementGeometry(
        area=float(g.area[K]),
        centroid=g.centroid[K].copy(),
        vertices=g.vertices[K].copy(),
        edge_lengths=g.edge_lengths[K].copy(),
        normals=g.normals[K].copy(),
        tangents=g.tangents[K].copy(),
        midpoints=g.midpoints[K].copy(),
        heights=g.heights[K].copy(),
        grad_bary=g.grad_bary[K].copy(),
    )


def boundary_companion(mesh, e):
    """Return ``(K, K', e', e'')`` for boundary edge ``e``.

    K contains e; e' is the interior edge of K with the smallest global index;
    K' is the neighbour across e'; e'' is the edge of K' sharing no vertex
    with e.
    """
    if not mesh.boundary_edge_flags[e]:
        raise MeshError(f"edge {e} is not a boundary edge")
    K = int(mesh.edge_tris[e, 0])
    interior = [int(x) for x in mesh.tri_edges[K] if not mesh.boundary_edge_flags[x]]
    if not interior:
        raise MeshError(f"triangle {K} has no interior edge")
    e1 = min(interior)
    Kp = int(sum(mesh.edge_tris[e1]) - K)
    ends = set(mesh.edges[e].tolist())
    far = [int(x) for x in mesh.tri_edges[Kp] if not ends & set(mesh.edges[x].tolist())]
    if len(far) != 1:
        raise MeshError(f"no unique opposite edge for boundary edge {e}")
    return K, Kp, e1, far[0]


def is_uniform(mesh, tol=1e-12):
    """Every interior edge's two triangles form a parallelogram."""
    inner = np.flatnonzero(mesh.edge_tris[:, 1] >= 0)
    k1, k2 = mesh.edge_tris[inner, 0], mesh.edge_tris[inner, 1]
    mid = mesh.edge_midpoints[inner]
    opp1 = _opposite_vertex(mesh, k1, inner)
    opp2 = _opposite_vertex(mesh, k2, inner)
    refl = 2.0 * mid - mesh.vertices[opp1]
    return bool(np.all(np.abs(refl - mesh.vertices[opp2]) <= tol))


def _opposite_vertex(mesh, tris, edges):
    loc = np.argmax(mesh.tri_edges[tris] == edges[:, None], axis=1)
    return mesh.triangles[tris, loc]
