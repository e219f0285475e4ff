"""Small dense linear-algebra helpers."""

import numpy as np
from scipy import linalg


def max_asymmetry(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.T)))


def symmetrize(a):
    return 0.5 * (a + a.T)


def pivoted_cholesky(s, tol=None):
    """Diagonally pivoted Cholesky of a symmetric PSD matrix.

    Returns ``(factor, rank, residual)`` with ``s ~= factor @ factor.T``;
    ``factor`` is ``n x n`` with zero columns past ``rank``. Elimination
    stops once the largest remaining diagonal entry is ``<= tol``
    (default ``1e-12 * trace``). ``residual`` is the max-abs entry of the
    untouched Schur complement, which is ~0 exactly when ``s`` is PSD.
    """
    work = np.array(s, dtype=float, copy=True)
    n = work.shape[0]
    if tol is None:
        tol = 1e-12 * max(float(np.trace(work)), 0.0)
    factor = np.zeros((n, n))
    perm = np.arange(n)
    rank = 0
    for k in range(n):
        diag = np.diag(work)[k:]
        j = k + int(np.argmax(diag))
        if diag[j - k] <= tol:
            break
        if j != k:
            work[[k, j], :] = work[[j, k], :]
            work[:, [k, j]] = work[:, [j, k]]
            factor[[k, j], :] = factor[[j, k], :]
            perm[[k, j]] = perm[[j, k]]
        pivot = np.sqrt(work[k, k])
        factor[k, k] = pivot
        col = work[k + 1:, k] / pivot
        factor[k + 1:, k] = col
        work[k + 1:, k + 1:] -= np.outer(col, col)
        rank += 1
    rest = work[rank:, rank:]
    residual = float(np.max(np.abs(rest))) if rest.size else 0.0
    out = np.zeros((n, n))
    out[perm, :] = factor
    return out, rank, residual


def cholesky_attempt(a):
    """Plain dense Cholesky. Returns ``(lower, info)`` where ``info`` is the
    1-based order of the first failing leading minor, or 0 on success."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.copy(), 0
    c, info = linalg.lapack.dpotrf(a, lower=1, clean=1)
    return c, int(info)
