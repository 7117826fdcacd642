"""Global finite element spaces on a :class:`~mixedfem.mesh.Mesh`.

Three families are supported:

``lagrange``
    continuous P_r, affine map; constraint ``"zero_trace"`` removes the DOFs
    on boundary vertices and edges.
``rt``
    Raviart-Thomas of degree r, contravariant Piola map
    ``v = J v_hat / det J``; constraint ``"zero_normal"`` removes boundary
    edge DOFs.
``dg``
    discontinuous P_k, affine map; constraint ``"mean_zero"`` does not remove
    any DOF, it is imposed by a Lagrange multiplier when systems are built.

Coefficient vectors of :class:`FeFunction` always have full length
(``space.ndofs``); constrained entries are zero.
"""
from __future__ import annotations

import numpy as np

from .refelem import element

__all__ = ["FeSpace", "FeFunction", "build_space", "SpaceError"]

CONSTRAINTS = {
    "lagrange": (None, "zero_trace"),
    "rt": (None, "zero_normal"),
    "dg": (None, "mean_zero"),
}

CHUNK = 4096
# moments of general smooth fields are integrated at this degree
INTERP_DEGREE = 20


class SpaceError(ValueError):
    pass


class FeSpace:
    """DOF map for one field.

    Attributes
    ----------
    cell_dofs : (T, nb) int array
        Global DOF index of each local basis function.
    cell_signs : (T, nb) float array
        +-1; global basis restricted to a cell is ``sign * local basis``.
    free_dofs, constrained_dofs : int arrays
        Partition of ``range(ndofs)``.
    """

    def __init__(self, mesh, family, degree, constraint=None):
        if family not in CONSTRAINTS:
            raise SpaceError(f"unknown family {family!r}")
        if constraint not in CONSTRAINTS[family]:
            raise SpaceError(f"constraint {constraint!r} incompatible with {family}")
        self.mesh = mesh
        self.family = family
        self.degree = degree
        self.constraint = constraint
        self.element = element(family, degree)
        getattr(self, f"_number_{family}")()
        self.cell_dofs.setflags(write=False)
        self.cell_signs.setflags(write=False)
        mask = np.zeros(self.ndofs, dtype=bool)
        mask[self.constrained_dofs] = True
        self.free_dofs = np.flatnonzero(~mask)
        self.constrained_dofs = np.flatnonzero(mask)

    # -- numbering -------------------------------------------------------

    def _number_lagrange(self):
        m, r = self.mesh, self.degree
        nv, ne, nt = m.n_vertices, m.n_edges, m.n_triangles
        n_int = (r - 1) * (r - 2) // 2
        self.ndofs = nv + ne * (r - 1) + nt * n_int
        dofs = np.empty((nt, self.element.dim), dtype=np.int64)
        for i, ent in enumerate(self.element.entities):
            if ent[0] == "vertex":
                dofs[:, i] = m.triangles[:, ent[1]]
            elif ent[0] == "edge":
                _, e, k = ent
                pos = np.where(m.tri_edge_signs[:, e] > 0, k, r - k)
                dofs[:, i] = nv + m.tri_edges[:, e] * (r - 1) + pos - 1
            else:
                dofs[:, i] = nv + ne * (r - 1) + np.arange(nt) * n_int + ent[1]
        self.cell_dofs = dofs
        self.cell_signs = np.ones(dofs.shape)
        if self.constraint == "zero_trace":
            bedges = np.flatnonzero(m.boundary_edges)
            edge_nodes = nv + bedges[:, None] * (r - 1) + np.arange(r - 1)
            self.constrained_dofs = np.concatenate(
                [np.flatnonzero(m.boundary_vertices), edge_nodes.ravel()])
        else:
            self.constrained_dofs = np.empty(0, dtype=np.int64)

    def _number_rt(self):
        m, r = self.mesh, self.degree
        ne, nt = m.n_edges, m.n_triangles
        n_int = r * (r - 1)
        self.ndofs = ne * r + nt * n_int
        dofs = np.empty((nt, self.element.dim), dtype=np.int64)
        signs = np.ones(dofs.shape)
        for i, ent in enumerate(self.element.entities):
            if ent[0] == "edge":
                _, e, k = ent
                dofs[:, i] = m.tri_edges[:, e] * r + k
                signs[:, i] = m.tri_edge_signs[:, e] ** (k + 1)
            else:
                dofs[:, i] = ne * r + np.arange(nt) * n_int + ent[1]
        self.cell_dofs = dofs
        self.cell_signs = signs
        if self.constraint == "zero_normal":
            bedges = np.flatnonzero(m.boundary_edges)
            self.constrained_dofs = (bedges[:, None] * r + np.arange(r)).ravel()
        else:
            self.constrained_dofs = np.empty(0, dtype=np.int64)

    def _number_dg(self):
        nt, nb = self.mesh.n_triangles, self.element.dim
        self.ndofs = nt * nb
        self.cell_dofs = np.arange(nt * nb, dtype=np.int64).reshape(nt, nb)
        self.cell_signs = np.ones(self.cell_dofs.shape)
        self.constrained_dofs = np.empty(0, dtype=np.int64)

    # -- sizes -----------------------------------------------------------

    @property
    def dim(self):
        """Dimension of the constrained space."""
        n = len(self.free_dofs)
        return n - 1 if self.constraint == "mean_zero" else n

    @property
    def is_vector(self):
        return self.family == "rt"

    def restrict(self, coeffs):
        return np.asarray(coeffs)[self.free_dofs]

    def extend(self, free_coeffs):
        out = np.zeros(self.ndofs)
        out[self.free_dofs] = free_coeffs
        return out

    # -- tabulation ------------------------------------------------------

    def tabulate(self, pts, cells=slice(None)):
        """Physical basis data at reference points ``pts`` on ``cells``.

        Returns a dict.  Scalar families give ``"value"`` (nc, nb, nq); the
        Lagrange family adds ``"grad"`` and ``"curl"`` (nc, nb, nq, 2).  The RT
        family gives ``"value"`` (nc, nb, nq, 2) and ``"div"`` (nc, nb, nq).
        Signs are already applied.
        """
        m = self.mesh
        jac = m.jacobians[cells]
        det = m.dets[cells]
        sign = self.cell_signs[cells]
        nc = len(det)
        out = {}
        if self.family == "rt":
            v, d = self.element.tabulate(pts)
            val = np.einsum("cij,bqj->cbqi", jac, v) / det[:, None, None, None]
            out["value"] = val * sign[:, :, None, None]
            out["div"] = (d[None] / det[:, None, None]) * sign[:, :, None]
            return out
        if self.family == "dg":
            v, _ = self.element.tabulate(pts)
            out["value"] = np.broadcast_to(v, (nc,) + v.shape)
            return out
        v, g = self.element.tabulate(pts)
        inv_t = _inverse_transpose(jac, det)
        grad = np.einsum("cij,bqj->cbqi", inv_t, g)
        out["value"] = np.broadcast_to(v, (nc,) + v.shape)
        out["grad"] = grad
        out["curl"] = np.stack([grad[..., 1], -grad[..., 0]], axis=-1)
        return out

    def chunks(self):
        nt = self.mesh.n_triangles
        for start in range(0, nt, CHUNK):
            yield slice(start, min(start + CHUNK, nt))

    # -- interpolation ---------------------------------------------------

    def interpolate(self, f, qdeg=INTERP_DEGREE):
        """Canonical interpolant of a callable ``f(x, y)``.

        Lagrange: nodal values.  RT: edge and interior moments, computed on
        each cell after the inverse Piola pull-back with quadrature exact to
        ``qdeg``.  DG: not defined here (use the L2 projection).
        """
        m = self.mesh
        coeffs = np.zeros(self.ndofs)
        if self.family == "lagrange":
            x = m.map_to_physical(self.element.nodes)
            vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
            coeffs[self.cell_dofs] = np.broadcast_to(vals, x.shape[:2])
        elif self.family == "rt":
            el = self.element
            for cells in self.chunks():
                jac, det = m.jacobians[cells], m.dets[cells]
                origin = m.vertices[m.triangles[cells, 0]]
                adj = _adjugate(jac)

                def pulled(pts):
                    x = origin[:, None, :] + np.einsum("cij,qj->cqi", jac, pts)
                    fx, fy = f(x[..., 0], x[..., 1])
                    vals = np.stack(np.broadcast_arrays(fx, fy), axis=-1)
                    # det J * J^{-1} v
                    return np.einsum("cij,cqj->cqi", adj, vals)

                local = el.dofs(pulled, qdeg)  # (nb, nc)
                coeffs[self.cell_dofs[cells]] = local.T * self.cell_signs[cells]
        else:
            raise SpaceError("use projections.project_l2 for discontinuous spaces")
        coeffs[self.constrained_dofs] = 0.0
        return FeFunction(self, coeffs)

    def __repr__(self):
        return (f"FeSpace({self.family}, degree={self.degree}, "
                f"constraint={self.constraint}, dim={self.dim})")


def _inverse_transpose(jac, det):
    # J^{-T} for 2x2 matrices
    out = np.empty_like(jac)
    out[:, 0, 0] = jac[:, 1, 1]
    out[:, 0, 1] = -jac[:, 1, 0]
    out[:, 1, 0] = -jac[:, 0, 1]
    out[:, 1, 1] = jac[:, 0, 0]
    return out / det[:, None, None]


def _adjugate(jac):
    out = np.empty_like(jac)
    out[:, 0, 0] = jac[:, 1, 1]
    out[:, 0, 1] = -jac[:, 0, 1]
    out[:, 1, 0] = -jac[:, 1, 0]
    out[:, 1, 1] = jac[:, 0, 0]
    return out


def build_space(mesh, family, r, constraint=None):
    """Build a :class:`FeSpace`; ``r`` is the polynomial degree of the family."""
    return FeSpace(mesh, family, r, constraint)


class FeFunction:
    """Coefficient vector attached to a space."""

    def __init__(self, space, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.ndofs)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ndofs,):
            raise SpaceError(f"expected {space.ndofs} coefficients, got {coeffs.shape}")
        self.coeffs = coeffs

    def evaluate(self, triangle, ref_point, derivative=False):
        """Value at one reference point of one triangle.

        With ``derivative=True`` also return the gradient (Lagrange, DG) or the
        divergence (RT).
        """
        cells = slice(triangle, triangle + 1)
        pts = np.atleast_2d(ref_point)
        vals = self.at(pts, cells, derivative)
        if derivative:
            return vals[0][0, 0], vals[1][0, 0]
        return vals[0, 0]

    def at(self, pts, cells=slice(None), derivative=False):
        """Values on ``cells`` at reference points, shape (nc, nq[, 2])."""
        sp = self.space
        if sp.family == "dg":
            v, g = sp.element.tabulate(pts)
            c = self.coeffs[sp.cell_dofs[cells]]
            val = c @ v
            if not derivative:
                return val
            m = sp.mesh
            inv_t = _inverse_transpose(m.jacobians[cells], m.dets[cells])
            grad = np.einsum("cij,cb,bqj->cqi", inv_t, c, g)
            return val, grad
        tab = sp.tabulate(pts, cells)
        c = self.coeffs[sp.cell_dofs[cells]]
        if sp.family == "rt":
            val = np.einsum("cb,cbqi->cqi", c, tab["value"])
            if derivative:
                return val, np.einsum("cb,cbq->cq", c, tab["div"])
            return val
        val = np.einsum("cb,cbq->cq", c, tab["value"])
        if derivative:
            return val, np.einsum("cb,cbqi->cqi", c, tab["grad"])
        return val

    def __add__(self, other):
        return FeFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return FeFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return FeFunction(self.space, a * self.coeffs)

    __rmul__ = __mul__
