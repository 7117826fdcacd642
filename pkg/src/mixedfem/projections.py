"""Projection, interpolation and decomposition operators.

These are used to check the discrete structure (exact sequence, commuting
projections, Hodge decomposition) rather than to solve problems.

Notation: ``Sigma`` is Lagrange P_r (``Sigma0`` with zero trace), ``V0`` is
RT_r with zero normal trace, ``S`` is discontinuous P_{r-1} and ``S_hat``
its mean-zero subspace.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import (
    assemble_curl_coupling,
    assemble_div_pressure,
    assemble_load,
    assemble_mass,
    assemble_mean,
    assemble_stiffness,
    compose_block_system,
)
from .linalg import sparse_direct_solve
from .refelem import quadrature
from .space import INTERP_DEGREE, FeFunction, SpaceError, build_space

__all__ = [
    "DATA_DEGREE",
    "project_l2",
    "project_elliptic_sigma",
    "interpolate_rt_canonical",
    "project_pvh",
    "discrete_gradient",
    "discrete_hodge_decompose",
    "HodgeParts",
    "curl_operator",
    "curl_moments",
    "l2_norm",
    "l2_error",
]


# data given as callables is integrated at this degree so that identities
# between projections hold to roundoff, not just to quadrature error
DATA_DEGREE = INTERP_DEGREE


def _signs(offsets, signs):
    return np.repeat(np.asarray(signs, dtype=float), np.diff(offsets))


def l2_error(fn, exact=None, part="value", qdeg=None):
    """L2 norm of ``fn - exact``, or of their divergences (``part="div"``).

    ``exact(x, y)`` returns a scalar or a pair; None means zero.
    """
    space = fn.space
    mesh = space.mesh
    rule = quadrature(qdeg or 2 * space.degree + 6)
    total = 0.0
    for cells in space.chunks():
        w = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        if part == "div":
            if space.family != "rt":
                raise SpaceError("divergence is only defined for RT functions")
            _, vals = fn.at(rule.points, cells, derivative=True)
        else:
            vals = fn.at(rule.points, cells)
        if exact is not None:
            x = mesh.map_to_physical(rule.points)[cells]
            ex = exact(x[..., 0], x[..., 1])
            ex = np.stack(np.broadcast_arrays(*ex), axis=-1) if isinstance(ex, tuple) else ex
            vals = vals - ex
        sq = vals ** 2 if vals.ndim == 2 else np.sum(vals ** 2, axis=-1)
        total += np.sum(w * sq)
    return float(np.sqrt(total))


def l2_norm(fn, part="value", qdeg=None):
    """L2 norm of an :class:`FeFunction`, or of its divergence (``part="div"``)."""
    return l2_error(fn, None, part, qdeg)


def project_l2(space, s, qdeg=DATA_DEGREE):
    """L2 projection of ``s(x, y)`` onto a discontinuous space.

    The Gram matrix is block diagonal and, for the affine map, equal to
    ``|det J|`` times the reference Gram matrix, so one reference solve
    serves every cell.  On the mean-zero variant the mean is subtracted.
    """
    if space.family != "dg":
        raise SpaceError("project_l2 needs a discontinuous space")
    rule = quadrature(qdeg)
    ref, _ = space.element.tabulate(rule.points)
    gram = np.einsum("bq,dq,q->bd", ref, ref, rule.weights)
    rhs = assemble_load(space, s, qdeg)
    det = np.abs(space.mesh.dets)
    local = np.linalg.solve(gram, rhs[space.cell_dofs].T).T / det[:, None]
    coeffs = np.zeros(space.ndofs)
    coeffs[space.cell_dofs] = local
    fn = FeFunction(space, coeffs)
    if space.constraint == "mean_zero":
        mean = assemble_mean(space) @ coeffs / np.sum(det) * 2.0
        fn = FeFunction(space, coeffs - mean * _constant_coeffs(space))
    return fn


def _constant_coeffs(space):
    # the first discontinuous basis function is identically one
    c = np.zeros(space.ndofs)
    c[space.cell_dofs[:, 0]] = 1.0
    return c


def _grad_load(space, grad_tau, qdeg):
    """``(grad tau, grad phi_i)`` on all DOFs of a Lagrange space."""
    rule = quadrature(qdeg)
    mesh = space.mesh
    out = np.zeros(space.ndofs)
    for cells in space.chunks():
        x = mesh.map_to_physical(rule.points)[cells]
        gx, gy = grad_tau(x[..., 0], x[..., 1])
        g = np.stack(np.broadcast_arrays(gx, gy), axis=-1)
        w = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        tab = space.tabulate(rule.points, cells)
        local = np.einsum("cbqi,cqi,cq->cb", tab["grad"], g, w)
        np.add.at(out, space.cell_dofs[cells].ravel(), local.ravel())
    return out


def curl_moments(sigma_space, v, qdeg=DATA_DEGREE):
    """``(v, curl tau_i)`` on the free DOFs of a Lagrange space."""
    rule = quadrature(qdeg)
    mesh = sigma_space.mesh
    out = np.zeros(sigma_space.ndofs)
    for cells in sigma_space.chunks():
        x = mesh.map_to_physical(rule.points)[cells]
        vx, vy = v(x[..., 0], x[..., 1])
        vals = np.stack(np.broadcast_arrays(vx, vy), axis=-1)
        w = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        tab = sigma_space.tabulate(rule.points, cells)
        local = np.einsum("cbqi,cqi,cq->cb", tab["curl"], vals, w)
        np.add.at(out, sigma_space.cell_dofs[cells].ravel(), local.ravel())
    return out[sigma_space.free_dofs]


def project_elliptic_sigma(space, tau, grad_tau, qdeg=DATA_DEGREE):
    """Elliptic projection onto a Lagrange space.

    ``(curl P tau, curl rho) = (curl tau, curl rho)`` for all ``rho``; on the
    full space the mean ``(P tau, 1) = (tau, 1)`` is imposed by a multiplier,
    on the zero-trace space no mean condition is used.
    """
    if space.family != "lagrange":
        raise SpaceError("project_elliptic_sigma needs a Lagrange space")
    K = assemble_stiffness(space)
    g = _grad_load(space, grad_tau, qdeg)[space.free_dofs]
    if space.constraint == "zero_trace":
        x = sparse_direct_solve(K, g, signs=np.ones(space.dim))
        return FeFunction(space, space.extend(x))
    m = assemble_mean(space)
    A, b, off = compose_block_system([[K]], [g], mean_constraint=(0, m))
    b[-1] = assemble_load(build_space(space.mesh, "dg", 0), tau, qdeg).sum()
    x = sparse_direct_solve(A, b, signs=_signs(off, (1, -1)))
    return FeFunction(space, space.extend(x[:off[1]]))


def interpolate_rt_canonical(space, v):
    """Canonical RT interpolant: edge normal moments and interior moments.

    ``v(x, y)`` returns the pair ``(vx, vy)``.  The divergence is not needed
    by the interpolant itself; it commutes with ``div`` through the L2
    projection onto discontinuous P_{r-1}.
    """
    if space.family != "rt":
        raise SpaceError("interpolate_rt_canonical needs an RT space")
    return space.interpolate(v)


def _mixed_saddle(V, P, F, G):
    """Solve ``(w, phi) + (lam, div phi) = F``, ``(div w, q) = G`` on V x S_hat."""
    M = assemble_mass(V)
    B = assemble_div_pressure(V, P)
    A, b, off = compose_block_system(
        [[M, B.T], [B, None]], [F, G], mean_constraint=(1, assemble_mean(P)))
    x = sparse_direct_solve(A, b, signs=_signs(off, (1, -1, 1)))
    return x[off[0]:off[1]], x[off[1]:off[2]]


def project_pvh(v, div_v, mesh, r, qdeg=DATA_DEGREE):
    """Projection ``P_{V0}`` of a vector field onto RT_r with zero normal trace.

    Characterized by ``(v - Pv, curl tau) = 0`` for tau in Sigma0 and
    ``(div(v - Pv), s) = 0`` for mean-zero s in S, and computed from the
    saddle system
    ``(w, phi) + (lam, div phi) = (v, phi)``, ``(div w, q) = (div v, q)``
    with ``lam`` in S_hat.  Testing the first row with ``phi = curl tau``
    gives the first relation, the second row is the second.
    """
    V = build_space(mesh, "rt", r, "zero_normal")
    P = build_space(mesh, "dg", r - 1, "mean_zero")
    F = assemble_load(V, v, qdeg)
    G = assemble_load(P, div_v, qdeg)
    w, _ = _mixed_saddle(V, P, F, G)
    return FeFunction(V, V.extend(w))


def discrete_gradient(phi, v_space):
    """``grad0_h phi`` in V0: ``(grad0_h phi, w) = -(phi, div w)`` for all w."""
    M = assemble_mass(v_space)
    B = assemble_div_pressure(v_space, phi.space)
    g = sparse_direct_solve(M, -(B.T @ phi.coeffs), signs=np.ones(v_space.dim))
    return FeFunction(v_space, v_space.extend(g))


@dataclass
class HodgeParts:
    rho: FeFunction
    phi: FeFunction
    curl_rho: FeFunction
    grad_phi: FeFunction

    def __iter__(self):
        # unpacks as (rho, phi)
        return iter((self.rho, self.phi))


def discrete_hodge_decompose(v):
    """Split ``v`` in V0 as ``curl rho + grad0_h phi``.

    ``rho`` in Sigma0 solves ``(curl rho, curl tau) = (v, curl tau)`` and
    ``phi`` in S_hat solves the mixed Poisson problem
    ``(g, w) + (phi, div w) = 0``, ``(div g, q) = (div v, q)`` whose flux is
    ``g = grad0_h phi``.
    """
    V = v.space
    if V.family != "rt" or V.constraint != "zero_normal":
        raise SpaceError("v must lie in RT with zero normal trace")
    mesh, r = V.mesh, V.degree
    S0 = build_space(mesh, "lagrange", r, "zero_trace")
    P = build_space(mesh, "dg", r - 1, "mean_zero")
    vf = V.restrict(v.coeffs)
    K = assemble_stiffness(S0)
    C = assemble_curl_coupling(S0, V)
    rho = sparse_direct_solve(K, C.T @ vf, signs=np.ones(S0.dim))
    B = assemble_div_pressure(V, P)
    g, phi = _mixed_saddle(V, P, np.zeros(V.dim), B @ vf)
    rho = FeFunction(S0, S0.extend(rho))
    curl_rho = FeFunction(V, curl_operator(S0, V) @ rho.coeffs)
    return HodgeParts(rho, FeFunction(P, P.extend(phi)), curl_rho,
                      FeFunction(V, V.extend(g)))


def curl_operator(sigma_space, v_space):
    """Sparse matrix taking Lagrange coefficients to RT coefficients of the curl.

    Under the affine map and the contravariant Piola map the pull-back of
    ``curl tau`` is the reference curl of the pulled-back ``tau``, so one
    reference matrix ``DOF_i(curl phi_j)`` serves every cell up to the RT
    edge signs.  Shared edge entries agree between the two cells and are
    taken once.  Shape is (v_space.ndofs, sigma_space.ndofs), full DOFs.
    """
    if sigma_space.family != "lagrange" or v_space.family != "rt":
        raise SpaceError("curl_operator needs (lagrange, rt) spaces")
    if sigma_space.degree != v_space.degree or sigma_space.mesh is not v_space.mesh:
        raise SpaceError("spaces must share mesh and degree")
    lag = sigma_space.element

    def ref_curl(pts):
        _, g = lag.tabulate(pts)
        return np.stack([g[..., 1], -g[..., 0]], axis=-1)

    local = v_space.element.dofs(ref_curl)  # (n_rt, n_lag)
    vals = v_space.cell_signs[:, :, None] * local[None]
    rows = np.broadcast_to(v_space.cell_dofs[:, :, None], vals.shape).ravel()
    cols = np.broadcast_to(sigma_space.cell_dofs[:, None, :], vals.shape).ravel()
    vals = vals.ravel()
    keep = np.abs(vals) > 1e-14 * np.abs(local).max()
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    _, first = np.unique(rows * sigma_space.ndofs + cols, return_index=True)
    return sp.csr_matrix((vals[first], (rows[first], cols[first])),
                         shape=(v_space.ndofs, sigma_space.ndofs))
