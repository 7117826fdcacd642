"""Mixed solvers: vector Laplacian, Ciarlet-Raviart biharmonic, Stokes.

All three are built from the same blocks.  With ``tau`` in a Lagrange space
Sigma and ``v`` in a Raviart-Thomas space V the vector Laplacian reads::

    (sigma, tau) - (u, curl tau)            = 0
    (curl sigma, v) + (div u, div v)        = (f, v)

and is assembled in the symmetric form ``[[-M, C^T], [C, D]]``.  The boundary
condition selects the spaces:

============  ===================  =====================
bc_mode       sigma                u
============  ===================  =====================
electric      P_r                  RT_r
magnetic      P_r, zero trace      RT_r, zero normal
dirichlet     P_r                  RT_r, zero normal
============  ===================  =====================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import (
    assemble_curl_coupling,
    assemble_div_pressure,
    assemble_divdiv,
    assemble_load,
    assemble_mass,
    assemble_mean,
    assemble_stiffness,
    compose_block_system,
)
from .linalg import sparse_direct_solve
from .space import FeFunction, build_space

__all__ = [
    "BC_MODES",
    "VectorLaplaceSolution",
    "BiharmonicSolution",
    "StokesSolution",
    "vector_laplace_spaces",
    "solve_vector_laplacian",
    "solve_biharmonic_cr",
    "solve_stokes_vvp",
]

BC_MODES = ("electric", "magnetic", "dirichlet")


@dataclass
class VectorLaplaceSolution:
    sigma_h: FeFunction
    u_h: FeFunction
    bc_mode: str


@dataclass
class BiharmonicSolution:
    sigma_h: FeFunction
    U_h: FeFunction


@dataclass
class StokesSolution:
    sigma_h: FeFunction
    u_h: FeFunction
    p_h: FeFunction


def vector_laplace_spaces(mesh, r, bc_mode):
    if bc_mode not in BC_MODES:
        raise ValueError(f"unknown bc_mode {bc_mode!r}")
    sigma_c = "zero_trace" if bc_mode == "magnetic" else None
    u_c = None if bc_mode == "electric" else "zero_normal"
    return (build_space(mesh, "lagrange", r, sigma_c),
            build_space(mesh, "rt", r, u_c))


def _split(x, offsets):
    return [x[offsets[i]:offsets[i + 1]] for i in range(len(offsets) - 1)]


def _block_signs(offsets, signs):
    """Per-unknown diagonal signs from one sign per block."""
    return np.repeat(np.asarray(signs, dtype=float), np.diff(offsets))


def solve_vector_laplacian(mesh, r, bc_mode, f, symmetrize=True, qdeg=None):
    """Mixed finite element solution of ``curl rot u - grad div u = f``."""
    S, V = vector_laplace_spaces(mesh, r, bc_mode)
    M = assemble_mass(S)
    C = assemble_curl_coupling(S, V)
    D = assemble_divdiv(V)
    F = assemble_load(V, f, qdeg)
    A, b, off = compose_block_system(
        [[M, -C.T], [C, D]], [np.zeros(S.dim), F], symmetrize=symmetrize)
    signs = _block_signs(off, (-1, 1) if symmetrize else (1, 1))
    sigma, u = _split(sparse_direct_solve(A, b, signs=signs), off)
    return VectorLaplaceSolution(FeFunction(S, S.extend(sigma)),
                                 FeFunction(V, V.extend(u)), bc_mode)


def solve_biharmonic_cr(mesh, r, g, qdeg=None):
    """Ciarlet-Raviart method: ``sigma_h`` in P_r, ``U_h`` in P_r with zero trace.

    ``(sigma_h, tau) - (curl U_h, curl tau) = 0`` and
    ``(curl sigma_h, curl V) = (g, V)``.
    """
    S = build_space(mesh, "lagrange", r)
    S0 = build_space(mesh, "lagrange", r, "zero_trace")
    M = assemble_mass(S)
    K = assemble_stiffness(S)[:, S0.free_dofs]
    G = assemble_load(S0, g, qdeg)
    A, b, off = compose_block_system(
        [[M, -K], [K.T, None]], [np.zeros(S.dim), G], symmetrize=True)
    sigma, U = _split(sparse_direct_solve(A, b, signs=_block_signs(off, (-1, 1))), off)
    return BiharmonicSolution(FeFunction(S, S.extend(sigma)),
                              FeFunction(S0, S0.extend(U)))


def solve_stokes_vvp(mesh, r, f, qdeg=None):
    """Vorticity-velocity-pressure Stokes discretization.

    ``sigma_h`` in P_r, ``u_h`` in RT_r with zero normal trace, ``p_h`` in
    discontinuous P_{r-1} with zero mean (enforced by a multiplier).
    """
    S = build_space(mesh, "lagrange", r)
    V = build_space(mesh, "rt", r, "zero_normal")
    P = build_space(mesh, "dg", r - 1, "mean_zero")
    M = assemble_mass(S)
    C = assemble_curl_coupling(S, V)
    B = assemble_div_pressure(V, P)
    F = assemble_load(V, f, qdeg)
    A, b, off = compose_block_system(
        [[M, -C.T, None], [C, None, -B.T], [None, -B, None]],
        [np.zeros(S.dim), F, np.zeros(P.ndofs)],
        symmetrize=True, mean_constraint=(2, assemble_mean(P)))
    x = sparse_direct_solve(A, b, signs=_block_signs(off, (-1, 1, -1, 1)))
    sigma, u, p, _ = _split(x, off)
    return StokesSolution(FeFunction(S, S.extend(sigma)),
                          FeFunction(V, V.extend(u)),
                          FeFunction(P, P.extend(p)))
