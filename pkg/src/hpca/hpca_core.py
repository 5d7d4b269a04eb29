"""Two-pass hashed randomized truncated PCA.

fit() probes the hashed empirical covariance C = (XH)^T (XH) / n with a
Gaussian matrix, orthonormalizes the image, probes again, and extracts the
top-k eigenpairs from the l x l matrix Z^T Z.  Peak dense state is a
constant number of d x l matrices; no p- or n-sized dense array is ever
allocated (the streamed row chunk buffer aside).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from queue import SimpleQueue
from typing import Optional, Tuple

import numpy as np

from ._kernels import PassWorkspace
from .dense_linalg import gaussian_matrix, gram_schmidt, pinv_diag, sym_eig, _fix_column_signs
from .errors import DimensionError, ModelFormatError
from .hashing import HashSpec, IdentityHash, apply_hash
from .sparse_io import SparseDataset, SparseRow, iter_chunks, stream_rows

DEFAULT_CHUNK_ROWS = 1024


@dataclass
class HpcaConfig:
    k: int
    d: int
    hash: object  # HashSpec or IdentityHash
    l: Optional[int] = None
    seed_omega: int = 0
    center: bool = False
    deterministic_reduce: bool = True
    chunk_rows: int = DEFAULT_CHUNK_ROWS
    parallel: int = 1

    def __post_init__(self):
        if self.l is None:
            self.l = self.k
        if self.k < 1:
            raise DimensionError("k must be >= 1")
        if not (self.k <= self.l <= self.d):
            raise DimensionError("need k <= l <= d")
        if self.d <= self.k:
            raise DimensionError("need d > k")
        if self.hash.d != self.d:
            raise DimensionError(f"config d {self.d} != hash d {self.hash.d}")
        if self.chunk_rows < 1 or self.parallel < 1:
            raise DimensionError("chunk_rows and parallel must be >= 1")


@dataclass
class PassAccumulator:
    """Mergeable partial sums of one data-parallel pass."""

    acc: np.ndarray  # d x l running sum of hx (hx^T M)
    mean_acc: Optional[np.ndarray]  # length-d running sum of hx, if centering
    count: int = 0

    @classmethod
    def zeros(cls, d: int, l: int, center: bool = False) -> "PassAccumulator":
        return cls(np.zeros((d, l)), np.zeros(d) if center else None, 0)

    def merge(self, other: "PassAccumulator") -> "PassAccumulator":
        self.acc += other.acc
        if self.mean_acc is not None and other.mean_acc is not None:
            self.mean_acc += other.mean_acc
        self.count += other.count
        return self


@dataclass
class PcaModel:
    """Fitted loadings (d x k, orthonormal columns), singular values of
    XH/sqrt(n), optional hashed mean, and the hash that defines the input
    space.  Immutable after fit; safe to share across threads."""

    loadings: np.ndarray
    singular_values: np.ndarray
    hashed_mean: Optional[np.ndarray]
    hash: object
    k: int
    d: int
    n_fit: int


def accumulate_pass(
    ds: SparseDataset,
    hash_spec,
    M: np.ndarray,
    center: bool = False,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    parallel: int = 1,
    acc: Optional[PassAccumulator] = None,
) -> PassAccumulator:
    """Raw sums of hx (hx^T M) (and of hx when centering) over the rows.

    Chunks of fixed size are accumulated independently and merged in
    canonical (row-order) sequence, so results are bit-reproducible for a
    fixed chunk size regardless of parallelism.
    """
    d = hash_spec.d
    if M.shape[0] != d:
        raise DimensionError(f"pass matrix has {M.shape[0]} rows, expected {d}")
    l = M.shape[1]
    if acc is None:
        acc = PassAccumulator.zeros(d, l, center)

    def run_chunk(chunk, ws_pool):
        indptr, indices, values = chunk
        buckets, signs = hash_spec.hash_row(indices)
        svals = signs * values
        ws = ws_pool.get()
        try:
            part = np.zeros((d, l))
            ws.accumulate(indptr, buckets, svals, M, part)
            mpart = None
            if center:
                mpart = np.zeros(d)
                ws.accumulate_mean(indptr, buckets, svals, mpart)
        finally:
            ws_pool.put(ws)
        return part, mpart, indptr.shape[0] - 1

    ws_pool = SimpleQueue()
    for _ in range(max(1, parallel)):
        ws_pool.put(PassWorkspace(d, l))

    if parallel <= 1:
        for chunk in iter_chunks(ds, chunk_rows):
            _merge_part(acc, run_chunk(chunk, ws_pool), center)
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            pending = []
            for chunk in iter_chunks(ds, chunk_rows):
                pending.append(pool.submit(run_chunk, chunk, ws_pool))
                # keep the pipeline short so only O(parallel) chunks are live
                while len(pending) > 2 * parallel:
                    _merge_part(acc, pending.pop(0).result(), center)
            for fut in pending:
                _merge_part(acc, fut.result(), center)
    return acc


def _merge_part(acc: PassAccumulator, part_tuple, center: bool) -> None:
    part, mpart, rows = part_tuple
    acc.acc += part
    if center:
        acc.mean_acc += mpart
    acc.count += rows


def finalize_pass(
    acc: PassAccumulator, n: int, M: np.ndarray, center_mean: Optional[np.ndarray] = None
) -> np.ndarray:
    """(1/n) * sums, with the rank-one mean correction when centering."""
    out = acc.acc / n
    if center_mean is not None:
        out = out - np.outer(center_mean, center_mean @ M)
    return out


def run_pass(
    ds: SparseDataset,
    hash_spec,
    M: np.ndarray,
    center_mean: Optional[np.ndarray] = None,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    parallel: int = 1,
) -> np.ndarray:
    """(1/n) sum_i hx_i (hx_i^T M), streamed per row; O(d*l) output."""
    if ds.n == 0:
        raise DimensionError("pass over an empty dataset")
    acc = accumulate_pass(ds, hash_spec, M, chunk_rows=chunk_rows, parallel=parallel)
    return finalize_pass(acc, ds.n, M, center_mean)


def mean_pass(ds: SparseDataset, hash_spec, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> np.ndarray:
    """(1/n) sum_i hx_i, one streaming pass, O(d) state."""
    d = hash_spec.d
    macc = np.zeros(d)
    ws = PassWorkspace(d, 1)
    count = 0
    for indptr, indices, values in iter_chunks(ds, chunk_rows):
        buckets, signs = hash_spec.hash_row(indices)
        ws.accumulate_mean(indptr, buckets, signs * values, macc)
        count += indptr.shape[0] - 1
    if count == 0:
        raise DimensionError("mean pass over an empty dataset")
    return macc / count


def fit(ds: SparseDataset, cfg: HpcaConfig) -> PcaModel:
    """Run the full two-pass fit and return the model."""
    n = ds.n
    if n < 2:
        raise DimensionError("fit requires n >= 2")
    if cfg.k >= n:
        raise DimensionError(f"k {cfg.k} must be < n {n}")
    chunk = cfg.chunk_rows if cfg.deterministic_reduce else max(cfg.chunk_rows, 1)

    m = mean_pass(ds, cfg.hash, chunk) if cfg.center else None
    omega = gaussian_matrix(cfg.d, cfg.l, cfg.seed_omega)
    Y = run_pass(ds, cfg.hash, omega, m, chunk, cfg.parallel)
    del omega
    Q = gram_schmidt(Y)
    del Y
    Z = run_pass(ds, cfg.hash, Q, m, chunk, cfg.parallel)
    del Q
    eig = sym_eig(Z.T @ Z)
    lam = np.clip(eig.eigenvalues[: cfg.k], 0.0, None)  # PSD up to roundoff
    upsilon = eig.eigenvectors[:, : cfg.k]
    sig2 = np.sqrt(lam)
    sig = lam**0.25
    loadings = Z @ (upsilon * pinv_diag(sig2))
    _fix_column_signs(loadings)
    return PcaModel(
        loadings=loadings,
        singular_values=sig,
        hashed_mean=m,
        hash=cfg.hash,
        k=cfg.k,
        d=cfg.d,
        n_fit=n,
    )


def _hashed_input(model: PcaModel, x: SparseRow) -> np.ndarray:
    hx = apply_hash(model.hash, x)
    if model.hashed_mean is not None:
        hx = hx - model.hashed_mean
    return hx


def project_unwhitened(model: PcaModel, x: SparseRow) -> np.ndarray:
    """V^T H^T x (mean-corrected when the model is centered)."""
    return model.loadings.T @ _hashed_input(model, x)


def project_whitened(model: PcaModel, x: SparseRow) -> np.ndarray:
    """Sigma^+ V^T H^T x; coordinates with thresholded singular values are 0."""
    return pinv_diag(model.singular_values) * project_unwhitened(model, x)


def fit_transform(ds: SparseDataset, cfg: HpcaConfig) -> Tuple[PcaModel, np.ndarray]:
    """fit() plus a third streaming pass of whitened scores, row by row."""
    model = fit(ds, cfg)
    scores = np.empty((ds.n, cfg.k))
    for i, row in enumerate(stream_rows(ds)):
        scores[i] = project_whitened(model, row)
    return model, scores


def working_set_bytes(d: int, l: int, k: int, center: bool = False) -> int:
    """Computed peak dense working set of fit(): a constant number of d x l
    matrices plus k x k terms; independent of p and n."""
    return 4 * d * l * 8 + l * l * 8 + (d * 8 if center else 0)


# ---------------------------------------------------------------------------
# model file format (text, versioned)

def _fmt(v: float) -> str:
    return repr(float(v))


def save_model(model: PcaModel, path) -> None:
    """Versioned text format; floats as shortest round-trip decimals."""
    with open(path, "w") as fh:
        center = 1 if model.hashed_mean is not None else 0
        fh.write(f"HPCA1 {model.k} {model.d} {model.n_fit} {center}\n")
        fh.write(" ".join(str(f) for f in model.hash.header_fields()) + "\n")
        fh.write(" ".join(_fmt(v) for v in model.singular_values) + "\n")
        if center:
            fh.write(" ".join(_fmt(v) for v in model.hashed_mean) + "\n")
        for i in range(model.d):
            fh.write(" ".join(_fmt(v) for v in model.loadings[i]) + "\n")


def load_model(path) -> PcaModel:
    with open(path, "r") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "HPCA1":
            raise ModelFormatError(f"unknown model version/header: {header[:1]}")
        k, d, n_fit, center = (int(t) for t in header[1:])
        hline = fh.readline().split()
        if hline and hline[0] == "hash" and len(hline) == 4:
            hash_spec = HashSpec(int(hline[1]), int(hline[2]), int(hline[3]))
        elif hline and hline[0] == "identity" and len(hline) == 2:
            hash_spec = IdentityHash(int(hline[1]))
        else:
            raise ModelFormatError(f"bad hash line: {hline}")
        if hash_spec.d != d:
            raise ModelFormatError("hash dimension disagrees with header")
        sig = np.array([float(t) for t in fh.readline().split()])
        if sig.shape[0] != k:
            raise ModelFormatError("singular value count disagrees with header")
        mean = None
        if center:
            mean = np.array([float(t) for t in fh.readline().split()])
            if mean.shape[0] != d:
                raise ModelFormatError("hashed mean length disagrees with header")
        loadings = np.empty((d, k))
        for i in range(d):
            row = fh.readline().split()
            if len(row) != k:
                raise ModelFormatError(f"loadings row {i} has {len(row)} values, expected {k}")
            loadings[i] = [float(t) for t in row]
    return PcaModel(loadings, sig, mean, hash_spec, k, d, n_fit)
