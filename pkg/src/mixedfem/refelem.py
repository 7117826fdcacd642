"""Reference-triangle bases and quadrature.

The reference triangle has vertices (0, 0), (1, 0), (0, 1).  All bases are
built by inverting a DOF-duality matrix against monomial spanning sets, so
``dofs(basis) == I`` is the single invariant every family must satisfy.

Degrees follow the mixed-method convention: ``RaviartThomas(1)`` is the
lowest-order Raviart-Thomas element, paired with ``Lagrange(1)`` and
``Discontinuous(0)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from numpy.polynomial import legendre
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureRule",
    "quadrature",
    "edge_quadrature",
    "Lagrange",
    "RaviartThomas",
    "Discontinuous",
    "eval_lagrange",
    "eval_rt",
    "eval_dg",
    "REF_VERTICES",
    "SUPPORTED_DEGREES",
]

SUPPORTED_DEGREES = (1, 2, 3, 4)
MAX_QUADRATURE_DEGREE = 20

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# same convention as mesh.LOCAL_EDGES: edge i opposite vertex i, counterclockwise
REF_EDGES = ((1, 2), (2, 0), (0, 1))
_CENTROID = np.array([1.0, 1.0]) / 3.0


class UnsupportedDegree(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sum to 1/2
    degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def quadrature(degree):
    """Collapsed Gauss rule on the reference triangle, exact to ``degree``.

    Gauss-Legendre in one direction times Gauss-Jacobi(1, 0) in the other,
    pushed through the Duffy map ``(s, t) -> (s (1 - t), t)``.  All weights
    are positive and all points interior.
    """
    degree = int(degree)
    if not 1 <= degree <= MAX_QUADRATURE_DEGREE:
        raise UnsupportedDegree(f"quadrature degree {degree} outside 1..{MAX_QUADRATURE_DEGREE}")
    n = ceil((degree + 1) / 2)
    zs, ws = legendre.leggauss(n)
    s, w_s = 0.5 * (zs + 1.0), 0.5 * ws
    zt, wt = roots_jacobi(n, 1.0, 0.0)
    t, w_t = 0.5 * (zt + 1.0), 0.25 * wt
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(w_s, w_t)
    points = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    points.setflags(write=False)
    weights = W.ravel()
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree):
    """Gauss-Legendre points and weights on [0, 1], exact to ``degree``."""
    n = max(1, ceil((degree + 1) / 2))
    z, w = legendre.leggauss(n)
    return 0.5 * (z + 1.0), 0.5 * w


def _exponents(k):
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def _monomials(exps, pts):
    """Values (nm, np) and gradients (nm, np, 2) of x^a y^b at ``pts``."""
    x, y = pts[:, 0], pts[:, 1]
    vals = np.empty((len(exps), len(pts)))
    grads = np.zeros((len(exps), len(pts), 2))
    for i, (a, b) in enumerate(exps):
        vals[i] = x**a * y**b
        if a:
            grads[i, :, 0] = a * x ** (a - 1) * y**b
        if b:
            grads[i, :, 1] = b * x**a * y ** (b - 1)
    return vals, grads


def _refined_inverse(a):
    inv = np.linalg.inv(a)
    return inv + inv @ (np.eye(len(a)) - a @ inv)


def _shifted_legendre(k, t):
    return legendre.legval(2.0 * t - 1.0, np.eye(k + 1)[k])


def _check_degree(r):
    if r not in SUPPORTED_DEGREES:
        raise UnsupportedDegree(f"degree {r} not in {SUPPORTED_DEGREES}")


class Lagrange:
    """Continuous nodal P_r element.

    Local DOFs are ordered: the three vertices, then the ``r - 1`` nodes of each
    edge in counterclockwise traversal order, then interior nodes.
    ``entities[i]`` is ``("vertex", v)``, ``("edge", e, k)`` with ``k`` the
    1-based position along the traversal, or ``("interior", j)``.
    """

    family = "lagrange"

    def __init__(self, r):
        _check_degree(r)
        self.degree = r
        self.dim = (r + 1) * (r + 2) // 2
        nodes, entities = [], []
        for v in range(3):
            nodes.append(REF_VERTICES[v])
            entities.append(("vertex", v))
        for e, (a, b) in enumerate(REF_EDGES):
            for k in range(1, r):
                nodes.append(REF_VERTICES[a] + k / r * (REF_VERTICES[b] - REF_VERTICES[a]))
                entities.append(("edge", e, k))
        j = 0
        for i in range(1, r):
            for m in range(1, r - i):
                nodes.append(np.array([m / r, i / r]))
                entities.append(("interior", j))
                j += 1
        self.nodes = np.array(nodes)
        self.entities = entities
        self._exps = _exponents(r)
        vander, _ = _monomials(self._exps, self.nodes - _CENTROID)  # (nm, nnodes)
        self._coeffs = _refined_inverse(vander.T)  # columns: basis in monomials

    def dofs(self, fvals):
        """Nodal DOFs from values ``f(nodes)``."""
        return np.asarray(fvals)

    def tabulate(self, pts):
        """Values (nb, np) and gradients (nb, np, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v, g = _monomials(self._exps, pts - _CENTROID)
        c = self._coeffs.T
        return c @ v, np.einsum("bm,mpi->bpi", c, g)


class Discontinuous:
    """Monomial basis of P_k with no interelement continuity; first function is 1."""

    family = "dg"

    def __init__(self, k):
        if k < 0:
            raise UnsupportedDegree("negative degree")
        self.degree = k
        self._exps = _exponents(k)
        self.dim = len(self._exps)

    def tabulate(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _monomials(self._exps, pts)


class RaviartThomas:
    """Raviart-Thomas element of degree r (normal traces in P_{r-1}).

    Local space ``P_{r-1}^2 + x * homogeneous P_{r-1}``.  DOFs: on each edge,
    moments of the outward normal component against shifted Legendre
    polynomials ``L_k(t)``, ``k < r``, with ``t`` running along the
    counterclockwise traversal; in the interior, moments against
    ``(m, 0)`` and ``(0, m)`` for monomials ``m`` of degree ``<= r - 2``.

    Reversing an edge flips the normal and maps ``L_k(t) -> (-1)^k L_k(t)``,
    so global edge DOF ``k`` equals the local one times ``sign**(k + 1)``.
    """

    family = "rt"

    def __init__(self, r):
        _check_degree(r)
        self.degree = r
        self.dim = r * (r + 2)
        self.n_edge_dofs = r
        self.n_interior_dofs = r * (r - 1)
        self.entities = [("edge", e, k) for e in range(3) for k in range(r)]
        self.entities += [("interior", j) for j in range(self.n_interior_dofs)]

        self._p_exps = _exponents(r - 1)
        self._h_exps = [(r - 1 - j, j) for j in range(r)]
        self._i_exps = _exponents(r - 2) if r >= 2 else []

        self._rules = {}
        self._default_rule = 2 * r

        vander = self.dofs(self._span_values)  # (ndofs, nspan)
        self._coeffs = _refined_inverse(vander)  # span coefficients per basis function

    def _span_values(self, pts):
        """Spanning set: values (ns, np, 2) and divergences (ns, np)."""
        # centroid-centred monomials keep the duality matrix well conditioned
        pts = pts - _CENTROID
        pv, pg = _monomials(self._p_exps, pts)
        hv, hg = _monomials(self._h_exps, pts)
        n_p, n_h, npts = len(pv), len(hv), len(pts)
        vals = np.zeros((2 * n_p + n_h, npts, 2))
        div = np.empty((2 * n_p + n_h, npts))
        vals[:n_p, :, 0] = pv
        div[:n_p] = pg[:, :, 0]
        vals[n_p:2 * n_p, :, 1] = pv
        div[n_p:2 * n_p] = pg[:, :, 1]
        vals[2 * n_p:] = hv[:, :, None] * pts[None, :, :]
        div[2 * n_p:] = (self.degree + 1) * hv
        return vals, div

    def _rule(self, degree):
        """Edge points, weights, Legendre values and the interior rule."""
        if degree not in self._rules:
            t, w = edge_quadrature(degree)
            pts, normals = [], []
            for a, b in REF_EDGES:
                tang = REF_VERTICES[b] - REF_VERTICES[a]
                pts.append(REF_VERTICES[a] + np.outer(t, tang))
                # outward normal scaled by edge length
                normals.append(np.array([tang[1], -tang[0]]))
            leg = np.array([_shifted_legendre(k, t) for k in range(self.degree)])
            self._rules[degree] = (pts, normals, w, leg, quadrature(degree))
        return self._rules[degree]

    def dofs(self, field, degree=None):
        """Apply the DOF functionals to a reference vector field.

        ``field(pts)`` returns values of shape ``(..., np, 2)`` (optionally as
        the first entry of a tuple); the result has shape ``(ndofs, ...)``.
        The moments use quadrature exact to ``degree`` (default ``2 r``,
        exact for fields in the local space); pass a higher degree for
        general smooth fields.
        """
        def values(pts):
            out = field(pts)
            return out[0] if isinstance(out, tuple) else out

        edge_pts, normals, edge_w, leg, quad = self._rule(degree or self._default_rule)
        rows = []
        for pts, nrm in zip(edge_pts, normals):
            vn = values(pts) @ nrm  # (..., np)
            rows.append(np.einsum("kp,p,...p->k...", leg, edge_w, vn))
        if self._i_exps:
            qp, qw = quad.points, quad.weights
            mv, _ = _monomials(self._i_exps, qp)
            v = values(qp)
            for comp in range(2):
                rows.append(np.einsum("mp,p,...p->m...", mv, qw, v[..., comp]))
        return np.concatenate(rows, axis=0)

    def tabulate(self, pts):
        """Values (nb, np, 2) and divergences (nb, np)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v, d = self._span_values(pts)
        c = self._coeffs.T
        return np.einsum("bs,spi->bpi", c, v), c @ d


@lru_cache(maxsize=None)
def element(family, degree):
    """Cached reference element instance."""
    cls = {"lagrange": Lagrange, "rt": RaviartThomas, "dg": Discontinuous}[family]
    return cls(degree)


def eval_lagrange(r, pts):
    """Lagrange P_r basis values (nb, np) and gradients (nb, np, 2)."""
    return element("lagrange", r).tabulate(pts)


def eval_rt(r, pts):
    """Raviart-Thomas basis values (nb, np, 2) and divergences (nb, np)."""
    return element("rt", r).tabulate(pts)


def eval_dg(k, pts):
    """Discontinuous P_k basis values (nb, np)."""
    return element("dg", k).tabulate(pts)[0]
