"""Direct solvers for the assembled systems and small dense helpers."""
from __future__ import annotations

import logging

import numpy as np
import pymetis
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["SingularSystemError", "sparse_direct_solve", "dense_rank_and_nullspace"]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
# pivot ratio below which the factorization is treated as singular
PIVOT_TOL = 1e-13
# diagonal shift (after equilibration) for the quasi-definite route
REG_SHIFT = 1e-7


class SingularSystemError(RuntimeError):
    """The system matrix is (numerically) singular; usually a BC/constraint bug."""


def nested_dissection(A):
    """METIS nested-dissection ordering of the pattern of ``A + A^T``."""
    G = (abs(A) + abs(A.T)).tocsr()
    G.setdiag(0)
    G.eliminate_zeros()
    if G.nnz == 0:
        return np.arange(A.shape[0])
    perm, _ = pymetis.nested_dissection(pymetis.CSRAdjacency(G.indptr, G.indices))
    return np.asarray(perm)


def _pivoted_lu(A):
    """Nested-dissection ordering with threshold partial pivoting."""
    perm = nested_dissection(A)
    try:
        lu = spla.splu(A[perm][:, perm].tocsc(), permc_spec="NATURAL",
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    pivots = np.abs(lu.U.diagonal())
    if pivots.min() <= PIVOT_TOL * pivots.max():
        raise SingularSystemError(
            f"pivot ratio {pivots.min() / pivots.max():.2e} indicates a singular matrix")

    def solve(rhs):
        out = np.empty_like(rhs)
        out[perm] = lu.solve(rhs[perm])
        return out
    return solve


def _refine(A, b, solve, rtol, max_refine):
    bnorm = np.linalg.norm(b)
    x = solve(b)
    for _ in range(max_refine):
        res = b - A @ x
        rel = np.linalg.norm(res) / bnorm
        if not np.isfinite(rel):
            raise SingularSystemError("non-finite solution")
        if rel <= rtol:
            break
        x += solve(res)
    return x


def _quasidefinite_solve(A, b, signs, rtol):
    """Regularized static-pivot LU used as a GMRES preconditioner.

    The matrix is symmetrically equilibrated, ``REG_SHIFT * signs`` is added
    to the diagonal (making it quasi-definite, so any symmetric ordering is
    stable without pivoting) and the factorization of that perturbed matrix
    preconditions GMRES on the exact system.  Returns None if GMRES stalls.
    """
    rowmax = np.sqrt(abs(A).max(axis=1).toarray().ravel())
    if np.any(rowmax == 0.0):
        raise SingularSystemError("matrix has an empty row")
    d = 1.0 / rowmax
    As = (sp.diags(d) @ A @ sp.diags(d)).tocsr()
    bs = d * b
    perm = nested_dissection(As)
    R = (As + sp.diags(REG_SHIFT * np.asarray(signs, dtype=float)))[perm][:, perm]
    try:
        lu = spla.splu(R.tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError:
        return None

    def precond(rhs):
        out = np.empty_like(rhs)
        out[perm] = lu.solve(rhs[perm])
        return out
    xs, info = spla.gmres(As, bs, M=spla.LinearOperator(As.shape, precond),
                          rtol=0.1 * rtol, atol=0.0, restart=60, maxiter=4)
    x = d * xs
    if info != 0 or not np.all(np.isfinite(x)):
        return None
    if np.linalg.norm(b - A @ x) > rtol * np.linalg.norm(b):
        return None
    return x


def sparse_direct_solve(A, b, rtol=RESIDUAL_TOL, max_refine=3, signs=None):
    """Solve ``A x = b`` by sparse LU.

    By default the matrix is symmetrically permuted by nested dissection and
    factored by SuperLU with threshold partial pivoting, followed by a few
    steps of iterative refinement.

    For symmetric saddle-point matrices, ``signs`` (+1/-1 per unknown, the
    expected sign of each diagonal block) enables a much cheaper route:
    zero diagonal blocks are shifted to make the matrix quasi-definite, the
    shifted matrix is factored without pivoting and used to precondition
    GMRES on the original system.  Pivoting on saddle-point matrices with
    zero blocks otherwise destroys the fill-reducing ordering.  If that
    route does not reach ``rtol`` the pivoted factorization is used.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if np.linalg.norm(b) == 0.0:
        # still factor so a singular matrix is reported
        _pivoted_lu(A)
        return np.zeros_like(b)
    x = None
    if signs is not None:
        if len(signs) != A.shape[0]:
            raise ValueError("signs must have one entry per unknown")
        x = _quasidefinite_solve(A, b, signs, rtol)
        if x is None:
            log.info("quasi-definite solve did not converge; using pivoted LU")
    if x is None:
        x = _refine(A, b, _pivoted_lu(A), rtol, max_refine)
    rel = np.linalg.norm(b - A @ x) / np.linalg.norm(b)
    if rel > rtol:
        raise SingularSystemError(f"relative residual {rel:.2e} exceeds {rtol:.0e}")
    log.debug("solved n=%d nnz=%d rel. residual %.2e", A.shape[0], A.nnz, rel)
    return x


def dense_rank_and_nullspace(A, rtol=1e-10):
    """Numerical rank and an orthonormal null-space basis (columns).

    Singular values below ``rtol * ||A||_2`` count as zero.
    """
    A = A.toarray() if sp.issparse(A) else np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0, np.eye(A.shape[1])
    _, s, vt = scipy.linalg.svd(A)
    if s.size == 0 or s[0] == 0.0:
        return 0, np.eye(A.shape[1])
    rank = int(np.sum(s > rtol * s[0]))
    return rank, vt[rank:].T.copy()
