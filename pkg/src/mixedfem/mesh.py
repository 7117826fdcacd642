"""Triangulations of the unit square.

A :class:`Mesh` stores counterclockwise triangles together with the derived
edge connectivity needed by the finite element spaces.  Edges are globally
oriented from the lower to the higher vertex index.  Local edge ``i`` of a
triangle is the edge opposite local vertex ``i`` and is traversed
counterclockwise, i.e. ``(v1, v2)``, ``(v2, v0)``, ``(v0, v1)``.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "build_uniform_square",
    "perturb_interior",
    "classify_boundary",
]

# local edge i is opposite local vertex i, traversed counterclockwise
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class MeshError(ValueError):
    """Raised for invalid mesh input or a failed mesh construction."""


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Mesh:
    """Immutable conforming triangulation.

    Parameters
    ----------
    vertices : (V, 2) array_like
        Vertex coordinates.
    triangles : (T, 3) array_like of int
        Vertex indices of each triangle, counterclockwise.
    """

    def __init__(self, vertices, triangles):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (V, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (T, 3)")
        self.vertices = _frozen(vertices)
        self.triangles = _frozen(triangles)

        local = triangles[:, LOCAL_EDGES]  # (T, 3, 2)
        lo = local.min(axis=2)
        hi = local.max(axis=2)
        keys = np.stack([lo.ravel(), hi.ravel()], axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        self.edges = _frozen(edges)
        self.tri_edges = _frozen(inverse.reshape(-1, 3))
        # +1 when the counterclockwise traversal agrees with low -> high
        self.tri_edge_signs = _frozen(np.where(local[:, :, 0] < local[:, :, 1], 1, -1))
        self.edge_incidence = _frozen(np.bincount(inverse.ravel(), minlength=len(edges)))

        self.boundary_edges, self.boundary_vertices = classify_boundary(self)

        p = vertices[triangles]
        j = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns
        self.jacobians = _frozen(j)
        self.dets = _frozen(j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0])
        lengths = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)
        self.edge_lengths = _frozen(lengths)
        self.h_max = float(lengths.max())

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def areas(self):
        return 0.5 * self.dets

    def map_to_physical(self, ref_points):
        """Images of reference points in every triangle, shape (T, nq, 2)."""
        ref_points = np.atleast_2d(ref_points)
        origin = self.vertices[self.triangles[:, 0]]
        return origin[:, None, :] + np.einsum("tij,qj->tqi", self.jacobians, ref_points)

    def validate(self, tol=1e-14):
        """Check the structural invariants; raise :class:`MeshError` on failure."""
        if np.any(self.dets <= tol):
            raise MeshError("triangle with non-positive signed area")
        inc = self.edge_incidence
        if np.any((inc != 1) & (inc != 2)):
            raise MeshError("edge with incidence other than 1 or 2")
        euler = self.n_vertices - self.n_edges + self.n_triangles
        if euler != 1:
            raise MeshError(f"Euler characteristic {euler} != 1")
        xb = self.vertices[self.boundary_vertices]
        on_side = np.isclose(xb, 0.0, atol=0) | np.isclose(xb, 1.0, atol=0)
        if not np.all(on_side.any(axis=1)):
            raise MeshError("boundary vertex off the unit-square boundary")

    def to_text(self):
        """Plain-text dump: ``v x y`` lines followed by ``t i j k`` lines."""
        lines = [f"v {x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += ["t %d %d %d" % tuple(t) for t in self.triangles.tolist()]
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return (f"Mesh(V={self.n_vertices}, E={self.n_edges}, "
                f"T={self.n_triangles}, h_max={self.h_max:.4g})")


def classify_boundary(mesh):
    """Boundary flags per edge and per vertex.

    An edge is on the boundary iff exactly one triangle contains it; a vertex
    is on the boundary iff it is an endpoint of a boundary edge.
    """
    bedges = mesh.edge_incidence == 1
    bverts = np.zeros(len(mesh.vertices), dtype=bool)
    bverts[mesh.edges[bedges].ravel()] = True
    return _frozen(bedges), _frozen(bverts)


def build_uniform_square(n):
    """Uniform ``n x n`` mesh, each subsquare cut by its positively sloped diagonal."""
    n = int(n)
    if n < 1:
        raise MeshError("need at least one subdivision per side")
    t = np.linspace(0.0, 1.0, n + 1)
    x, y = np.meshgrid(t, t)
    vertices = np.column_stack([x.ravel(), y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    a = (j * (n + 1) + i).ravel()
    b, c, d = a + 1, a + n + 2, a + n + 1
    # lower-right and upper-left halves, both counterclockwise
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([a, c, d])
    return Mesh(vertices, triangles)


def perturb_interior(mesh, amplitude=0.25, seed=0, max_retries=20):
    """Randomly displace interior vertices.

    Each interior vertex moves by at most ``amplitude`` times the length of its
    shortest incident edge, in a direction drawn from ``numpy.random`` seeded
    by ``seed``.  If a triangle inverts, the displacement is halved and the
    attempt repeated.
    """
    if not 0.0 <= amplitude < 0.5:
        raise MeshError("amplitude must lie in [0, 0.5)")
    if amplitude == 0.0:
        return Mesh(mesh.vertices.copy(), mesh.triangles.copy())

    h_local = np.full(mesh.n_vertices, np.inf)
    np.minimum.at(h_local, mesh.edges[:, 0], mesh.edge_lengths)
    np.minimum.at(h_local, mesh.edges[:, 1], mesh.edge_lengths)

    rng = np.random.default_rng(seed)
    radius = np.sqrt(rng.random(mesh.n_vertices))
    angle = 2.0 * np.pi * rng.random(mesh.n_vertices)
    offset = (radius * h_local)[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
    offset[mesh.boundary_vertices] = 0.0

    scale = amplitude
    for _ in range(max_retries):
        moved = Mesh(mesh.vertices + scale * offset, mesh.triangles)
        try:
            moved.validate()
        except MeshError:
            scale *= 0.5
            continue
        return moved
    raise MeshError("could not produce a valid perturbed mesh")
