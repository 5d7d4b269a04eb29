"""Dense kernels on small matrices: seeded Gaussians, modified Gram-Schmidt,
Jacobi symmetric eigendecomposition, diagonal pseudo-inverse, and a
brute-force SVD oracle used by the tests and diagnostics.

All matrices here are at most d x l or k x k; nothing p- or n-sized is
allocated except inside the explicitly desk-scale oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import gaussian_stream, jacobi_eig
from .errors import AsymmetricError, DimensionError, GuardError, NoConvergenceError, RankDeficientError

ORACLE_MAX_ELEMS = 10**7  # desk-scale guard for the brute-force oracle


@dataclass
class EigenDecomposition:
    """Eigenvalues nonincreasing; eigenvector columns orthonormal, each with
    its largest-magnitude entry nonnegative."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def gaussian_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """rows x cols i.i.d. N(0,1), filled row-major from a seeded stream."""
    if rows < 1 or cols < 1:
        raise DimensionError("gaussian_matrix needs positive dimensions")
    return gaussian_stream(seed, rows * cols).reshape(rows, cols)


def gram_schmidt(Y: np.ndarray) -> np.ndarray:
    """Orthonormal basis for span(Y) via modified Gram-Schmidt with one
    re-orthogonalization pass.

    Raises RankDeficientError when a column's residual norm falls below
    1e-12 of its pre-projection norm.
    """
    Y = np.asarray(Y, dtype=np.float64)
    d, k = Y.shape
    if d < k or k < 1:
        raise DimensionError("gram_schmidt requires d >= k >= 1")
    Q = np.array(Y, copy=True)
    for j in range(k):
        v = Q[:, j]
        pre_norm = float(np.linalg.norm(v))
        for _ in range(2):  # MGS, then one re-orthogonalization
            for i in range(j):
                v -= np.dot(Q[:, i], v) * Q[:, i]
        norm = float(np.linalg.norm(v))
        if norm <= 1e-12 * pre_norm or norm == 0.0:
            raise RankDeficientError(
                f"column {j} is numerically dependent (norm ratio "
                f"{norm / pre_norm if pre_norm else 0.0:.3e})"
            )
        Q[:, j] = v / norm
    return Q


def _fix_column_signs(V: np.ndarray) -> np.ndarray:
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def sym_eig(A: np.ndarray, tol_rel: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("sym_eig requires a square matrix")
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax > 0 and float(np.max(np.abs(A - A.T))) > 1e-9 * amax:
        raise AsymmetricError("input is not symmetric to 1e-9 relative")
    W = (A + A.T) / 2.0
    diag, V, sweeps = jacobi_eig(W, tol_rel=tol_rel, max_sweeps=max_sweeps)
    if sweeps < 0:
        raise NoConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    # nonincreasing order; stable sort keeps original index order on ties
    order = np.argsort(-diag, kind="stable")
    lam = diag[order]
    V = V[:, order]
    return EigenDecomposition(lam, _fix_column_signs(V))


def pinv_diag(sigma) -> np.ndarray:
    """Pseudo-inverse of a nonnegative diagonal with a 1e-12 relative cutoff."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size and np.min(sigma) < 0:
        raise DimensionError("pinv_diag entries must be nonnegative")
    cutoff = 1e-12 * float(np.max(sigma)) if sigma.size else 0.0
    out = np.zeros_like(sigma)
    keep = sigma > cutoff
    out[keep] = 1.0 / sigma[keep]
    return out


def oracle_svd(X: np.ndarray):
    """Brute-force economy SVD via Jacobi on the smaller Gram matrix.

    Returns (U, sigma, V) with sigma nonincreasing.  Desk-scale only; the
    columns of V (or U) past the numerical rank are zero.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if n * p > ORACLE_MAX_ELEMS:
        raise GuardError(f"oracle_svd guard: n*p = {n * p} > {ORACLE_MAX_ELEMS}")
    m = min(n, p)
    if n <= p:
        eig = sym_eig(X @ X.T, tol_rel=1e-14)
        lam = np.clip(eig.eigenvalues[:m], 0.0, None)
        sigma = np.sqrt(lam)
        U = eig.eigenvectors[:, :m]
        V = np.zeros((p, m))
        inv = pinv_diag(sigma)
        nz = inv > 0
        if np.any(nz):
            V[:, nz] = X.T @ (U[:, nz] * inv[nz])
    else:
        eig = sym_eig(X.T @ X, tol_rel=1e-14)
        lam = np.clip(eig.eigenvalues[:m], 0.0, None)
        sigma = np.sqrt(lam)
        V = eig.eigenvectors[:, :m]
        U = np.zeros((n, m))
        inv = pinv_diag(sigma)
        nz = inv > 0
        if np.any(nz):
            U[:, nz] = X @ (V[:, nz] * inv[nz])
    return U, sigma, V
