"""Desk-scale measurement of the subspace-approximation quantities: canonical
angles between hashed and exact principal subspaces, row coherence, Gram
perturbation, spectral gap, and the analysis's recommended hashed dimension.

All "exact" references come from the brute-force oracle; they can be
precomputed once and reused across hash seeds via ExactReference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import coherence_dense
from .dense_linalg import gram_schmidt, oracle_svd, sym_eig
from .errors import DimensionError, GuardError
from .hashing import apply_hash
from .hpca_core import HpcaConfig, fit_transform
from .sparse_io import SparseDataset, densify, stream_rows

PAIRWISE_ETA_MAX_N = 10**4
GRAM_MAX_N = 2000
EXACT_MAX_ELEMS = 10**7


@dataclass
class DiagnosticsReport:
    sin_phi_frobenius: float
    eta: float
    gram_perturbation_fro: float
    alpha: float
    gamma: float
    gap_violated: bool
    epsilon: float
    delta: float
    recommended_d: int
    eta_threshold: float
    eta_condition_met: bool
    n: int
    p: int
    d: int
    k: int

    def to_text(self) -> str:
        """Flat key=value block; one field per line."""
        lines = [
            f"n={self.n}",
            f"p={self.p}",
            f"d={self.d}",
            f"k={self.k}",
            f"sin_phi_frobenius={self.sin_phi_frobenius!r}",
            f"eta={self.eta!r}",
            f"gram_perturbation_fro={self.gram_perturbation_fro!r}",
            f"alpha={self.alpha!r}",
            f"gamma={self.gamma!r}",
            f"gap_violated={int(self.gap_violated)}",
            f"epsilon={self.epsilon!r}",
            f"delta={self.delta!r}",
            f"recommended_d={self.recommended_d}",
            "recommended_d_formula=round(144*ln(n/delta)/epsilon^2)",
            f"eta_threshold={self.eta_threshold!r}",
            f"eta_condition_met={int(self.eta_condition_met)}",
            # memory arithmetic: dense randomized working set vs hashed
            f"baseline_working_set_bytes={self.p * self.k * 8}",
            f"hashed_working_set_bytes={self.d * self.k * 8}",
        ]
        return "\n".join(lines)


def recommended_dim(n: int, epsilon: float, delta: float) -> int:
    """144 * ln(n/delta) / epsilon^2, rounded to the nearest integer."""
    if n < 1 or not (0 < delta < 1) or epsilon <= 0:
        raise DimensionError("need n >= 1, delta in (0,1), epsilon > 0")
    return max(1, int(math.floor(144.0 * math.log(n / delta) / epsilon**2 + 0.5)))


def eta_threshold(n: int, d: int, epsilon: float, delta: float) -> float:
    """Coherence level below which the subspace bound applies."""
    return epsilon / (18.0 * math.sqrt(2.0 * math.log(n / delta) * math.log(d / delta)))


def canonical_angles(A: np.ndarray, B: np.ndarray):
    """Cosines of the canonical angles between the column spaces, plus
    ||sin Phi||_F.  Cosines are the singular values of A^T B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise DimensionError("canonical_angles requires equal shapes")
    k = A.shape[1]
    for name, M in (("A", A), ("B", B)):
        if float(np.max(np.abs(M.T @ M - np.eye(k)))) > 1e-8:
            raise DimensionError(f"{name} does not have orthonormal columns")
    _, cosines, _ = oracle_svd(A.T @ B)
    cosines = np.clip(cosines, 0.0, 1.0)
    sin_fro = math.sqrt(float(np.sum(1.0 - cosines**2)))
    return cosines, sin_fro


def coherence_eta(ds: SparseDataset, pairs: bool = True) -> float:
    """Max infinity-to-2 norm ratio over rows and (optionally) all row
    differences; zero rows and identical pairs are skipped.

    With pairs=False the result is a lower bound (rows-only mode).
    """
    if ds.n < 1:
        raise DimensionError("coherence_eta needs at least one row")
    if pairs and ds.n > PAIRWISE_ETA_MAX_N:
        raise GuardError(
            f"pairwise eta guard: n = {ds.n} > {PAIRWISE_ETA_MAX_N}; use pairs=False"
        )
    if ds.n * ds.p <= EXACT_MAX_ELEMS:
        X = densify(ds)
        if pairs:
            return coherence_dense(X)
        best = 0.0
        for i in range(X.shape[0]):
            ss = float(X[i] @ X[i])
            if ss > 0:
                best = max(best, float(np.max(np.abs(X[i]))) / math.sqrt(ss))
        return best
    return _coherence_sparse(ds, pairs)


def _coherence_sparse(ds: SparseDataset, pairs: bool) -> float:
    rows = list(stream_rows(ds))
    best = 0.0
    for r in rows:
        if r.nnz():
            n2 = r.norm2()
            if n2 > 0:
                best = max(best, float(np.max(np.abs(r.values))) / n2)
    if not pairs:
        return best
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            a, b = rows[i], rows[j]
            union = np.union1d(a.indices, b.indices)
            va = np.zeros(union.shape[0])
            vb = np.zeros(union.shape[0])
            va[np.searchsorted(union, a.indices)] = a.values
            vb[np.searchsorted(union, b.indices)] = b.values
            diff = va - vb
            ss = float(diff @ diff)
            if ss > 0:
                best = max(best, float(np.max(np.abs(diff))) / math.sqrt(ss))
    return best


def _hashed_matrix(ds: SparseDataset, hash_spec) -> np.ndarray:
    XH = np.empty((ds.n, hash_spec.d))
    for i, row in enumerate(stream_rows(ds)):
        XH[i] = apply_hash(hash_spec, row)
    return XH


def _exact_gram(ds: SparseDataset) -> np.ndarray:
    if ds.n * ds.p <= EXACT_MAX_ELEMS:
        X = densify(ds)
        return X @ X.T
    rows = list(stream_rows(ds))
    n = len(rows)
    G = np.zeros((n, n))
    for i in range(n):
        a = rows[i]
        for j in range(i, n):
            b = rows[j]
            common, ia, ib = np.intersect1d(a.indices, b.indices, return_indices=True)
            G[i, j] = G[j, i] = float(np.dot(a.values[ia], b.values[ib]))
    return G


def gram_perturbation(ds: SparseDataset, hash_spec, exact_gram: Optional[np.ndarray] = None) -> float:
    """|| (XH)(XH)^T - X X^T ||_F at desk scale."""
    if ds.n > GRAM_MAX_N:
        raise GuardError(f"gram guard: n = {ds.n} > {GRAM_MAX_N}")
    G = _exact_gram(ds) if exact_gram is None else exact_gram
    XH = _hashed_matrix(ds, hash_spec)
    Gt = XH @ XH.T
    return float(np.linalg.norm(Gt - G, "fro"))


@dataclass
class ExactReference:
    """Hash-independent quantities, computed once and reused across seeds."""

    u_top: np.ndarray  # n x k exact left singular vectors
    sigma: np.ndarray  # all singular values of X, nonincreasing
    gram: np.ndarray  # X X^T
    eta: float


def exact_reference(ds: SparseDataset, k: int, eta_pairs: bool = True) -> ExactReference:
    if ds.n * ds.p > EXACT_MAX_ELEMS:
        raise GuardError(f"exact-reference guard: n*p = {ds.n * ds.p} > {EXACT_MAX_ELEMS}")
    if k >= ds.n:
        raise DimensionError("k must be < n")
    G = _exact_gram(ds)
    eig = sym_eig(G, tol_rel=1e-14)
    lam = np.clip(eig.eigenvalues, 0.0, None)
    sigma = np.sqrt(lam)
    u_top = eig.eigenvectors[:, :k]
    eta = coherence_eta(ds, pairs=eta_pairs and ds.n <= PAIRWISE_ETA_MAX_N)
    return ExactReference(u_top, sigma, G, eta)


def compare_to_exact(
    ds: SparseDataset,
    cfg: HpcaConfig,
    epsilon: float,
    delta: float,
    exact: Optional[ExactReference] = None,
) -> DiagnosticsReport:
    """Fit with the given config and measure everything against the oracle.

    The hashed subspace is the column-orthonormalized whitened score matrix,
    i.e. exactly the mapping the fitted model ships.
    """
    if exact is None:
        exact = exact_reference(ds, cfg.k)
    model, scores = fit_transform(ds, cfg)
    u_tilde = gram_schmidt(scores)
    _, sin_fro = canonical_angles(exact.u_top, u_tilde)

    k = cfg.k
    alpha = float(exact.sigma[k] ** 2) if exact.sigma.shape[0] > k else 0.0
    # singular values on the unnormalized XH scale, commensurate with alpha
    sig_scaled_sq = (model.singular_values * math.sqrt(ds.n)) ** 2
    gamma = float(np.min(sig_scaled_sq)) - alpha
    gp = gram_perturbation(ds, cfg.hash, exact_gram=exact.gram) if ds.n <= GRAM_MAX_N else float("nan")

    rec_d = recommended_dim(ds.n, epsilon, delta)
    thr = eta_threshold(ds.n, cfg.d, epsilon, delta)
    return DiagnosticsReport(
        sin_phi_frobenius=sin_fro,
        eta=exact.eta,
        gram_perturbation_fro=gp,
        alpha=alpha,
        gamma=gamma,
        gap_violated=gamma <= 0.0,
        epsilon=epsilon,
        delta=delta,
        recommended_d=rec_d,
        eta_threshold=thr,
        eta_condition_met=exact.eta <= thr,
        n=ds.n,
        p=ds.p,
        d=cfg.d,
        k=cfg.k,
    )
