"""Dense symmetric linear algebra used by every estimator.

Matrices are plain ``numpy.ndarray`` objects.  Symmetric inputs are
symmetrized as ``(M + M.T) / 2`` before decomposition, and column-orthonormal
matrices are checked with :func:`check_orthonormal`.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InputError, RankError

ORTHO_TOL = 1e-10
RANK_TOL = 1e-10


def symmetrize(M) -> np.ndarray:
    """Return ``(M + M.T) / 2`` as a float array, validating shape and finiteness."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    return (M + M.T) / 2.0


def check_orthonormal(V, tol: float = ORTHO_TOL) -> np.ndarray:
    """Validate that ``V.T @ V`` equals the identity to ``tol`` (max-abs)."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2 or V.shape[1] > V.shape[0]:
        raise DimensionError(f"expected a p x d matrix with d <= p, got shape {V.shape}")
    err = np.max(np.abs(V.T @ V - np.eye(V.shape[1])))
    if not err <= tol:
        raise InputError(f"columns are not orthonormal (max deviation {err:.3g})")
    return V


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is nonnegative.

    Ties in magnitude go to the lowest row index.
    """
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[rows, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def sym_eig_topd(M, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``d`` eigenpairs of a symmetric matrix.

    Parameters
    ----------
    M : array_like, shape (p, p)
        Symmetric matrix; symmetrized before decomposition.
    d : int
        Number of eigenpairs, ``1 <= d <= p``.

    Returns
    -------
    eigenvalues : ndarray, shape (d,)
        The ``d`` algebraically largest eigenvalues, descending.
    V : ndarray, shape (p, d)
        Matching unit eigenvectors, sign-normalized by :func:`fix_signs`.
        Within a repeated eigenvalue the basis is whatever LAPACK returns,
        ordered stably; compare such subspaces with :func:`projection_loss`.
    """
    M = symmetrize(M)
    p = M.shape[0]
    if not 1 <= d <= p:
        raise DimensionError(f"d={d} must satisfy 1 <= d <= p={p}")
    w, U = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")[:d]
    return w[order], fix_signs(U[:, order])


def _as_columns(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A[:, None] if A.ndim == 1 else A


def projection_loss(A, B) -> float:
    """Squared Frobenius distance between the projectors onto col(A) and col(B).

    Uses ``||P_A - P_B||_F^2 = 2 (d - ||A^T B||_F^2)`` for column-orthonormal
    ``A`` and ``B`` of identical shape.  The result is clipped to ``[0, 2d]``.
    """
    A, B = _as_columns(A), _as_columns(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    d = A.shape[1]
    loss = 2.0 * (d - float(np.sum((A.T @ B) ** 2)))
    return min(max(loss, 0.0), 2.0 * d)


def orthonormalize(M) -> np.ndarray:
    """Orthonormal basis of the column space of a full-column-rank matrix.

    Columns are produced in Gram-Schmidt order (via QR), so the leading ``j``
    output columns span the leading ``j`` input columns.
    """
    M = _as_columns(M)
    if M.shape[1] > M.shape[0]:
        raise DimensionError(f"more columns than rows: {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] < RANK_TOL * sv[0]:
        raise RankError("input is rank deficient")
    Q, R = np.linalg.qr(M)
    # make diag(R) positive so the result is unique
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def random_orthogonal(p: int, d: int, seed) -> np.ndarray:
    """Haar-distributed p x d column-orthonormal matrix, deterministic in ``seed``."""
    if not 1 <= d <= p:
        raise DimensionError(f"d={d} must satisfy 1 <= d <= p={p}")
    rng = np.random.default_rng(seed)
    return orthonormalize(rng.standard_normal((p, d)))
