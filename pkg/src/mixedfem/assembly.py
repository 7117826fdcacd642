"""Sparse assembly of the bilinear-form blocks and load vectors.

Every assembler integrates over cells in chunks, accumulates a coordinate
list and compresses it to CSR with sorted, summed entries.  Matrices are
returned on the *free* DOFs of their spaces (constrained rows and columns
dropped); all essential conditions in this package are homogeneous.

Default quadrature degree is ``2 r + 4`` where ``r`` is the largest degree
among the spaces involved.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .refelem import quadrature

__all__ = [
    "AssemblyError",
    "default_degree",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_curl_coupling",
    "assemble_divdiv",
    "assemble_div_pressure",
    "assemble_load",
    "assemble_mean",
    "compose_block_system",
    "dump_coo",
]


class AssemblyError(ValueError):
    pass


def default_degree(*spaces):
    return 2 * max(s.degree for s in spaces) + 4


def _same_mesh(*spaces):
    mesh = spaces[0].mesh
    if any(s.mesh is not mesh for s in spaces[1:]):
        raise AssemblyError("spaces live on different meshes")


def _bilinear(test, trial, kernel, qdeg, cell_order=None):
    """Generic bilinear assembly.

    ``kernel(tab_test, tab_trial, wdet)`` returns local matrices
    (nc, nb_test, nb_trial); ``wdet`` is (nc, nq) quadrature weight times
    |det J|.
    """
    _same_mesh(test, trial)
    rule = quadrature(qdeg)
    mesh = test.mesh
    rows, cols, vals = [], [], []
    order = np.arange(mesh.n_triangles) if cell_order is None else np.asarray(cell_order)
    for chunk in test.chunks():
        cells = order[chunk]
        ta = test.tabulate(rule.points, cells)
        tb = ta if trial is test else trial.tabulate(rule.points, cells)
        wdet = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        local = kernel(ta, tb, wdet)
        da, db = test.cell_dofs[cells], trial.cell_dofs[cells]
        rows.append(np.broadcast_to(da[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(db[:, None, :], local.shape).ravel())
        vals.append(local.ravel())
    full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(test.ndofs, trial.ndofs)).tocsr()
    full.sum_duplicates()
    full.sort_indices()
    return full[test.free_dofs][:, trial.free_dofs].tocsr()


def assemble_mass(space, qdeg=None, cell_order=None):
    """L2 Gram matrix of the basis of ``space``."""
    qdeg = qdeg or default_degree(space)
    if space.is_vector:
        def kernel(a, b, w):
            return np.einsum("cbqi,cdqi,cq->cbd", a["value"], b["value"], w)
    else:
        def kernel(a, b, w):
            return np.einsum("cbq,cdq,cq->cbd", a["value"], b["value"], w)
    return _bilinear(space, space, kernel, qdeg, cell_order)


def assemble_stiffness(space, qdeg=None):
    """``(curl tau_j, curl tau_i)`` on a Lagrange space (equal to grad-grad)."""
    if space.family != "lagrange":
        raise AssemblyError("stiffness needs a Lagrange space")
    qdeg = qdeg or default_degree(space)

    def kernel(a, b, w):
        return np.einsum("cbqi,cdqi,cq->cbd", a["grad"], b["grad"], w)
    return _bilinear(space, space, kernel, qdeg)


def assemble_curl_coupling(sigma_space, v_space, qdeg=None):
    """``C[i, j] = (curl tau_j, v_i)`` with tau in Lagrange, v in RT.

    The (u, curl tau) block of the mixed methods is ``C.T``.
    """
    if sigma_space.family != "lagrange" or v_space.family != "rt":
        raise AssemblyError("curl coupling needs (lagrange, rt) spaces")
    qdeg = qdeg or default_degree(sigma_space, v_space)

    def kernel(a, b, w):
        return np.einsum("cbqi,cdqi,cq->cbd", a["value"], b["curl"], w)
    return _bilinear(v_space, sigma_space, kernel, qdeg)


def assemble_divdiv(v_space, qdeg=None):
    """``(div v_j, div v_i)`` on an RT space."""
    if v_space.family != "rt":
        raise AssemblyError("divdiv needs an RT space")
    qdeg = qdeg or default_degree(v_space)

    def kernel(a, b, w):
        return np.einsum("cbq,cdq,cq->cbd", a["div"], b["div"], w)
    return _bilinear(v_space, v_space, kernel, qdeg)


def assemble_div_pressure(v_space, p_space, qdeg=None):
    """``B[i, j] = (q_i, div v_j)`` with q in the discontinuous space."""
    if v_space.family != "rt" or p_space.family != "dg":
        raise AssemblyError("div-pressure block needs (rt, dg) spaces")
    if p_space.degree != v_space.degree - 1:
        raise AssemblyError("pressure degree must be one less than the RT degree")
    qdeg = qdeg or default_degree(v_space)

    def kernel(a, b, w):
        return np.einsum("cbq,cdq,cq->cbd", a["value"], b["div"], w)
    return _bilinear(p_space, v_space, kernel, qdeg)


def _physical_points(space, rule, cells):
    x = space.mesh.map_to_physical(rule.points)[cells]
    return x[..., 0], x[..., 1]


def assemble_load(space, f, qdeg=None):
    """``(f, phi_i)`` on the free DOFs.

    ``f(x, y)`` returns a scalar array, or a pair ``(fx, fy)`` for RT spaces.
    """
    qdeg = qdeg or default_degree(space)
    rule = quadrature(qdeg)
    mesh = space.mesh
    out = np.zeros(space.ndofs)
    for cells in space.chunks():
        x, y = _physical_points(space, rule, cells)
        wdet = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        tab = space.tabulate(rule.points, cells)
        if space.is_vector:
            fx, fy = f(x, y)
            fv = np.stack(np.broadcast_arrays(fx, fy, x)[:2], axis=-1)
            local = np.einsum("cbqi,cqi,cq->cb", tab["value"], fv, wdet)
        else:
            fv = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)
            local = np.einsum("cbq,cq,cq->cb", tab["value"], fv, wdet)
        np.add.at(out, space.cell_dofs[cells].ravel(), local.ravel())
    return out[space.free_dofs]


def assemble_mean(space, qdeg=None):
    """``(1, phi_i)`` on the free DOFs of a scalar space."""
    return assemble_load(space, lambda x, y: np.ones_like(x), qdeg or default_degree(space))


def compose_block_system(blocks, rhs, symmetrize=False, mean_constraint=None):
    """Stack sparse blocks into one saddle-point system.

    Parameters
    ----------
    blocks : list of lists
        ``blocks[i][j]`` is a sparse matrix or ``None`` (zero block).
    rhs : list of arrays
        One vector per block row.
    symmetrize : bool
        Negate the first block row (and its right-hand side), turning
        ``[[M, -C^T], [C, D]]`` into the symmetric ``[[-M, C^T], [C, D]]``.
    mean_constraint : (int, array), optional
        ``(k, m)`` appends a multiplier ``lam`` with the column ``m`` in block
        row ``k`` and the row ``m^T x_k = 0``.

    Returns
    -------
    A : csr_matrix
    b : ndarray
    offsets : ndarray
        Start index of each block (plus the multiplier, if any, and the total).
    """
    n = len(blocks)
    sizes = []
    for i in range(n):
        size = None
        for j in range(n):
            if blocks[i][j] is not None:
                size = blocks[i][j].shape[0]
                break
        if size is None:
            raise AssemblyError(f"block row {i} is empty")
        sizes.append(size)
    for i in range(n):
        for j in range(n):
            blk = blocks[i][j]
            if blk is not None and blk.shape != (sizes[i], sizes[j]):
                raise AssemblyError(f"block ({i}, {j}) has shape {blk.shape}, "
                                    f"expected {(sizes[i], sizes[j])}")
        if len(rhs[i]) != sizes[i]:
            raise AssemblyError(f"rhs {i} has length {len(rhs[i])}, expected {sizes[i]}")

    rows = [list(r) for r in blocks]
    rhs = [np.asarray(r, dtype=float) for r in rhs]
    if symmetrize:
        rows[0] = [None if b is None else -b for b in rows[0]]
        rhs[0] = -rhs[0]
    if mean_constraint is not None:
        k, m = mean_constraint
        m = np.asarray(m, dtype=float).reshape(-1, 1)
        if len(m) != sizes[k]:
            raise AssemblyError("mean-constraint vector has the wrong length")
        for i in range(n):
            rows[i].append(sp.csr_matrix(m) if i == k else None)
        last = [None] * (n + 1)
        last[k] = sp.csr_matrix(m.T)
        rows.append(last)
        rhs.append(np.zeros(1))
        sizes.append(1)
    # bmat needs at least one block per row and column to infer shapes
    for i in range(len(rows)):
        if rows[i][i] is None:
            rows[i][i] = sp.csr_matrix((sizes[i], sizes[i]))
    A = sp.bmat(rows, format="csr")
    A.sum_duplicates()
    A.sort_indices()
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return A, np.concatenate(rhs), offsets


def dump_coo(A, path):
    """Write ``row col value`` lines."""
    coo = sp.coo_matrix(A)
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")
