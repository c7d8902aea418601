"""Spectral norms of sparse, mostly block-structured matrices."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .errors import SolverError

# Components larger than this go through Lanczos on M^* M.
DENSE_LIMIT = 3000
LANCZOS_RESIDUAL = 1e-10


def _dense_norm(block: np.ndarray) -> float:
    if block.size == 0:
        return 0.0
    return float(np.linalg.norm(block, 2))


def _lanczos_norm(M: sp.spmatrix) -> float:
    A = (M.conj().T @ M).tocsr()
    vals, vecs = eigsh(A, k=1, which="LA", tol=1e-14, maxiter=20 * A.shape[0])
    lam = float(vals[0])
    v = vecs[:, 0]
    res = float(np.linalg.norm(A @ v - lam * v))
    if res > LANCZOS_RESIDUAL * max(1.0, abs(lam)):
        raise SolverError(f"Lanczos residual {res:.3e} above certification threshold", res)
    return float(np.sqrt(max(lam, 0.0)))


def components(M: sp.spmatrix) -> list[np.ndarray]:
    """Index sets of the connected components of the sparsity graph of M."""
    S = sp.csr_matrix(M)
    pattern = (abs(S) + abs(S).T).tocsr()
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=ncomp))[:-1]
    return np.split(order, splits)


def spectral_norm(M, by_component: bool = True) -> float:
    """Operator 2-norm.

    The matrix is split into independent blocks along the connected
    components of its sparsity pattern; the norm is the max over blocks.
    """
    if not sp.issparse(M):
        return _dense_norm(np.asarray(M))
    M = sp.csr_matrix(M)
    if M.nnz == 0:
        return 0.0
    if not by_component:
        return _dense_norm(M.toarray()) if M.shape[0] <= DENSE_LIMIT else _lanczos_norm(M)
    best = 0.0
    for idx in components(M):
        if len(idx) == 1 and M[idx[0], idx[0]] == 0:
            continue
        sub = M[idx][:, idx]
        if len(idx) <= DENSE_LIMIT:
            best = max(best, _dense_norm(sub.toarray()))
        else:
            best = max(best, _lanczos_norm(sub))
    return best


def block_norm(M, idx: np.ndarray) -> float:
    """Norm of M compressed to the rows and columns in ``idx``."""
    if len(idx) == 0:
        return 0.0
    sub = sp.csr_matrix(M)[idx][:, idx]
    return spectral_norm(sub)
