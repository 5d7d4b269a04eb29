"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The backend is picked at import time from the HPCA_NO_NUMBA environment
variable and can be switched at runtime with set_backend() (used by the
benchmark and by the allocation-accounting tests, since tracemalloc cannot
see numba's internal allocations).

Both backends compute the same quantities; summation order may differ, so
results agree to roundoff but are only guaranteed bit-identical within a
single backend.
"""

from __future__ import annotations

import math
import os

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = 0xFFFFFFFFFFFFFFFF

_U = np.uint64


def mix64(x: int) -> int:
    """One splitmix64 step: advance by the golden-ratio increment, finalize."""
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def _finalize_u64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on already-advanced uint64 state."""
    x = (x ^ (x >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> _U(27))) * _U(0x94D049BB133111EB)
    return x ^ (x >> _U(31))


def hash_indices(indices, seed_h: int, seed_xi: int, d: int):
    """Buckets in [0, d) and signs in {-1, +1} for an array of feature ids.

    bucket(i) = mix64(seed_h ^ i*GOLDEN) mod d, sign(i) from the top bit of
    mix64(seed_xi ^ i*GOLDEN).  Fully vectorized; identical on both backends.
    """
    g = indices.astype(np.uint64) * _U(GOLDEN)
    bh = _finalize_u64((_U(seed_h & MASK64) ^ g) + _U(GOLDEN))
    bx = _finalize_u64((_U(seed_xi & MASK64) ^ g) + _U(GOLDEN))
    buckets = (bh % _U(d)).astype(np.int64)
    signs = np.where((bx >> _U(63)) == _U(0), 1.0, -1.0)
    return buckets, signs


def uniform_stream(seed: int, m: int) -> np.ndarray:
    """m uniforms in (0, 1] from the splitmix64 stream of `seed`."""
    t = np.arange(1, m + 1, dtype=np.uint64)
    x = _finalize_u64(_U(seed & MASK64) + t * _U(GOLDEN))
    return ((x >> _U(11)).astype(np.float64) + 1.0) * 2.0**-53


def gaussian_stream(seed: int, m: int) -> np.ndarray:
    """m i.i.d. standard normals: Box-Muller over the splitmix64 stream."""
    npairs = (m + 1) // 2
    u = uniform_stream(seed, 2 * npairs)
    u1 = u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * npairs)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:m]


# ---------------------------------------------------------------------------
# backend selection

_HAVE_NUMBA = False
if not os.environ.get("HPCA_NO_NUMBA"):
    try:
        import numba  # noqa: F401

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

_backend = "numba" if _HAVE_NUMBA else "numpy"


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba":
        if not _numba_available():
            raise RuntimeError("numba backend requested but numba is not importable")
        _ensure_numba_kernels()
    _backend = name


def get_backend() -> str:
    return _backend


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


# ---------------------------------------------------------------------------
# pass accumulation: acc += sum_rows hx (hx^T M), hx the hashed sparse row

def _pass_chunk_np(indptr, buckets, svals, M, acc):
    n_rows = indptr.shape[0] - 1
    for r in range(n_rows):
        s, e = indptr[r], indptr[r + 1]
        if s == e:
            continue
        b = buckets[s:e]
        v = svals[s:e]
        ub, inv = np.unique(b, return_inverse=True)
        uv = np.bincount(inv, weights=v)
        proj = uv @ M[ub]
        acc[ub] += uv[:, None] * proj[None, :]


def _mean_chunk_np(indptr, buckets, svals, macc):
    np.add.at(macc, buckets, svals)


def _ensure_numba_kernels() -> None:
    """Compile (lazily) the numba kernels into module globals."""
    if "_pass_chunk_nb" in globals():
        return
    from numba import njit, prange

    @njit(cache=True, nogil=True)
    def _pass_chunk_nb(indptr, buckets, svals, M, acc, scratch, stamp, ub, uv, proj, row_tag):
        n_rows = indptr.shape[0] - 1
        l = M.shape[1]
        for r in range(n_rows):
            s = indptr[r]
            e = indptr[r + 1]
            if s == e:
                continue
            for t in range(s, e):
                scratch[buckets[t]] += svals[t]
            tag = row_tag + r + 1
            cnt = 0
            for t in range(s, e):
                b = buckets[t]
                if stamp[b] != tag:
                    stamp[b] = tag
                    ub[cnt] = b
                    uv[cnt] = scratch[b]
                    scratch[b] = 0.0
                    cnt += 1
            for j in range(l):
                proj[j] = 0.0
            for t in range(cnt):
                b = ub[t]
                v = uv[t]
                for j in range(l):
                    proj[j] += v * M[b, j]
            for t in range(cnt):
                b = ub[t]
                v = uv[t]
                for j in range(l):
                    acc[b, j] += v * proj[j]

    @njit(cache=True, nogil=True)
    def _mean_chunk_nb(indptr, buckets, svals, macc):
        for t in range(buckets.shape[0]):
            macc[buckets[t]] += svals[t]

    @njit(cache=True, nogil=True)
    def _jacobi_nb(A, V, tol_off, max_sweeps):
        n = A.shape[0]
        skip = tol_off / (2.0 * n) if n > 0 else 0.0
        for sweep in range(max_sweeps):
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off += A[p, q] * A[p, q]
            off = math.sqrt(2.0 * off)
            if off <= tol_off:
                return sweep
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if abs(apq) <= skip:
                        continue
                    tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                    if tau >= 0.0:
                        t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                    else:
                        t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                    c = 1.0 / math.sqrt(1.0 + t * t)
                    s = t * c
                    for i in range(n):
                        aip = A[i, p]
                        aiq = A[i, q]
                        A[i, p] = c * aip - s * aiq
                        A[i, q] = s * aip + c * aiq
                    for i in range(n):
                        api = A[p, i]
                        aqi = A[q, i]
                        A[p, i] = c * api - s * aqi
                        A[q, i] = s * api + c * aqi
                    for i in range(n):
                        vip = V[i, p]
                        viq = V[i, q]
                        V[i, p] = c * vip - s * viq
                        V[i, q] = s * vip + c * viq
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += A[p, q] * A[p, q]
        off = math.sqrt(2.0 * off)
        if off <= tol_off:
            return max_sweeps
        return -1

    @njit(cache=True, nogil=True, parallel=True)
    def _coherence_dense_nb(X):
        n, p = X.shape
        best = np.zeros(n)
        for i in prange(n):
            mx = 0.0
            ss = 0.0
            for j in range(p):
                a = abs(X[i, j])
                if a > mx:
                    mx = a
                ss += X[i, j] * X[i, j]
            loc = mx / math.sqrt(ss) if ss > 0.0 else 0.0
            for i2 in range(i + 1, n):
                mx = 0.0
                ss = 0.0
                for j in range(p):
                    dlt = X[i, j] - X[i2, j]
                    a = abs(dlt)
                    if a > mx:
                        mx = a
                    ss += dlt * dlt
                if ss > 0.0:
                    r = mx / math.sqrt(ss)
                    if r > loc:
                        loc = r
            best[i] = loc
        out = 0.0
        for i in range(n):
            if best[i] > out:
                out = best[i]
        return out

    globals()["_pass_chunk_nb"] = _pass_chunk_nb
    globals()["_mean_chunk_nb"] = _mean_chunk_nb
    globals()["_jacobi_nb"] = _jacobi_nb
    globals()["_coherence_dense_nb"] = _coherence_dense_nb


if _HAVE_NUMBA:
    _ensure_numba_kernels()


def _jacobi_np(A, V, tol_off, max_sweeps):
    n = A.shape[0]
    skip = tol_off / (2.0 * n) if n > 0 else 0.0
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(A[iu] ** 2)))
        if off <= tol_off:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    off = math.sqrt(2.0 * float(np.sum(A[iu] ** 2)))
    return max_sweeps if off <= tol_off else -1


def _coherence_dense_np(X):
    n = X.shape[0]
    best = 0.0
    for i in range(n):
        row = X[i]
        ss = float(row @ row)
        if ss > 0.0:
            best = max(best, float(np.max(np.abs(row))) / math.sqrt(ss))
        if i + 1 < n:
            diff = X[i + 1 :] - row
            ss2 = np.einsum("ij,ij->i", diff, diff)
            mx2 = np.max(np.abs(diff), axis=1)
            ok = ss2 > 0.0
            if np.any(ok):
                best = max(best, float(np.max(mx2[ok] / np.sqrt(ss2[ok]))))
    return best


class PassWorkspace:
    """Reusable per-worker scratch for pass accumulation.

    Sized by the hashed dimension d and the widest row in a chunk; total
    extra space is O(d + max_nnz), never O(p) or O(n).
    """

    def __init__(self, d: int, l: int):
        self.d = d
        self.l = l
        self._tag = 0
        if get_backend() == "numba":
            self.scratch = np.zeros(d)
            self.stamp = np.zeros(d, dtype=np.int64)
            self.proj = np.zeros(l)
            self.ub = np.zeros(0, dtype=np.int64)
            self.uv = np.zeros(0)
        else:
            self.scratch = None

    def accumulate(self, indptr, buckets, svals, M, acc):
        if self.scratch is not None:
            max_nnz = int(np.max(np.diff(indptr))) if indptr.shape[0] > 1 else 0
            if self.ub.shape[0] < max_nnz:
                self.ub = np.zeros(max_nnz, dtype=np.int64)
                self.uv = np.zeros(max_nnz)
            _pass_chunk_nb(
                indptr, buckets, svals, M, acc,
                self.scratch, self.stamp, self.ub, self.uv, self.proj, self._tag,
            )
            self._tag += indptr.shape[0] - 1
        else:
            _pass_chunk_np(indptr, buckets, svals, M, acc)

    def accumulate_mean(self, indptr, buckets, svals, macc):
        if get_backend() == "numba":
            _mean_chunk_nb(indptr, buckets, svals, macc)
        else:
            _mean_chunk_np(indptr, buckets, svals, macc)


def jacobi_eig(A: np.ndarray, tol_rel: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi on a symmetric matrix (copied, not modified in place).

    Returns (diag, V, sweeps); sweeps is -1 when the off-diagonal Frobenius
    norm failed to reach tol_rel * ||A||_F within max_sweeps.
    """
    W = np.array(A, dtype=np.float64, copy=True)
    n = W.shape[0]
    V = np.eye(n)
    tol_off = tol_rel * math.sqrt(float(np.sum(W * W)))
    if get_backend() == "numba":
        sweeps = _jacobi_nb(W, V, tol_off, max_sweeps)
    else:
        sweeps = _jacobi_np(W, V, tol_off, max_sweeps)
    return np.diag(W).copy(), V, sweeps


def coherence_dense(X: np.ndarray) -> float:
    """Max infinity-to-2 norm ratio over rows and all row differences."""
    if get_backend() == "numba":
        return float(_coherence_dense_nb(np.ascontiguousarray(X, dtype=np.float64)))
    return float(_coherence_dense_np(np.asarray(X, dtype=np.float64)))
