"""Finite-quotient approximation: push operators through the regular representation of Q."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..groups import FiniteQuotient
from ..ring import GroupRingMatrix
from .results import HEURISTIC, EngineError, FKResult, ResourceLimit

KERNEL_REL_TOL = 1e-12
DENSE_BUDGET = 8192


def push_forward(op: GroupRingMatrix, quotient: FiniteQuotient) -> sp.csr_matrix:
    """Sparse matrix of op acting on C^(rows*b) (x) l^2(Q).

    Index ((i*b + s) * |Q| + x); the coefficient at g acts by left translation
    with the image of g, so the push-forward is multiplicative.
    """
    if quotient.source != op.group:
        raise EngineError("quotient is defined on a different group")
    arr, index = quotient.target.element_table()
    nq = len(arr)
    b = op.block_size
    rows, cols, vals = [], [], []
    perm_cache: dict = {}
    for (i, j), e in op.entries.items():
        for g, blk in e.terms.items():
            q = quotient.image(g)
            perm = perm_cache.get(q)
            if perm is None:
                prod = np.asarray(q, dtype=np.int64)[arr]  # rows are q o y
                perm = np.array([index[row.tobytes()] for row in prod])
                perm_cache[q] = perm
            ys = np.arange(nq)
            for s in range(b):
                for t in range(b):
                    c = blk[s, t]
                    if c == 0:
                        continue
                    rows.append((i * b + s) * nq + perm)
                    cols.append((j * b + t) * nq + ys)
                    vals.append(np.full(nq, c, dtype=complex))
    shape = (op.rows * b * nq, op.cols * b * nq)
    if not rows:
        return sp.csr_matrix(shape, dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def _is_hermitian(mat: sp.csr_matrix) -> bool:
    diff = mat - mat.getH()
    return diff.nnz == 0 or float(abs(diff).max()) <= 1e-14 * max(float(abs(mat).max()), 1.0)


def _cholesky_logdet(dense: np.ndarray) -> Optional[float]:
    """log det of a Hermitian matrix whose spectrum provably clears the kernel threshold, else None.

    Success of the factorization of A - eps I with eps = KERNEL_REL_TOL * ||A||_1
    shows every eigenvalue exceeds the threshold used for kernel detection.
    """
    herm = 0.5 * (dense + dense.conj().T)
    eps = KERNEL_REL_TOL * float(np.abs(herm).sum(axis=0).max())
    try:
        np.linalg.cholesky(herm - eps * np.eye(herm.shape[0]))
        chol = np.linalg.cholesky(herm)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(chol).real)))


def fk_det_finite_quotient(op: GroupRingMatrix, quotient: FiniteQuotient, budget: int = DENSE_BUDGET) -> FKResult:
    """Normalized log of the product of nonzero singular values of the pushed matrix."""
    nq = quotient.order
    mat = push_forward(op, quotient)
    if max(mat.shape) > budget:
        raise ResourceLimit(f"pushed matrix {mat.shape} exceeds the dense budget {budget}")
    if min(mat.shape) == 0:
        return FKResult(0.0, HEURISTIC, "quotient", diagnostics={"quotientOrder": nq, "kernelDim": 0})
    dense = mat.toarray()
    hermitian = mat.shape[0] == mat.shape[1] and _is_hermitian(mat)
    if hermitian:
        fast = _cholesky_logdet(dense)
        if fast is not None:
            return FKResult(fast / nq, HEURISTIC, "quotient",
                            diagnostics={"quotientOrder": nq, "kernelDim": 0, "factorization": "cholesky"})
    if hermitian:
        sv = np.abs(np.linalg.eigvalsh(0.5 * (dense + dense.conj().T)))
    else:
        sv = np.linalg.svd(dense, compute_uv=False)
    top = float(sv.max()) if sv.size else 0.0
    keep = sv > KERNEL_REL_TOL * top if top > 0 else np.zeros_like(sv, dtype=bool)
    kernel = int(sv.size - keep.sum())
    log_det = float(np.sum(np.log(sv[keep]))) / nq
    diag = {
        "quotientOrder": nq,
        "kernelDim": kernel,
        "smallestRetained": float(sv[keep].min()) if keep.any() else None,
    }
    flags = ["kernel detected"] if kernel else []
    status = "zero determinant" if not keep.any() else "ok"
    return FKResult(log_det if keep.any() else -math.inf, HEURISTIC, "quotient", flags=flags,
                    diagnostics=diag, status=status)


def spectrum_finite_quotient(op: GroupRingMatrix, quotient: FiniteQuotient, count: Optional[int] = None,
                             dense_limit: int = 512) -> np.ndarray:
    """Lowest ``count`` eigenvalues (ascending) of the pushed self-adjoint matrix."""
    mat = push_forward(op, quotient)
    n = mat.shape[0]
    if mat.shape[0] != mat.shape[1] or not _is_hermitian(mat):
        raise EngineError("spectrum needs a self-adjoint operator")
    if n == 0:
        return np.zeros(0)
    count = n if count is None else min(int(count), n)
    if n <= dense_limit or count >= n - 1:
        if n > 4 * DENSE_BUDGET:
            raise ResourceLimit(f"pushed matrix of size {n} exceeds the budget")
        return np.sort(np.linalg.eigvalsh(mat.toarray()))[:count]
    herm = (0.5 * (mat + mat.getH())).tocsc()
    scale = float(abs(herm).sum(axis=1).max())
    shift = -1e-3 * max(scale, 1e-300)
    vals = spla.eigsh(herm, k=count, sigma=shift, which="LM", return_eigenvectors=False)
    return np.sort(vals.real)


fkDetFiniteQuotient = fk_det_finite_quotient
spectrumFiniteQuotient = spectrum_finite_quotient
