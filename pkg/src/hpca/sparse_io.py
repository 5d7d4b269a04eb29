"""Streaming libsvm-format datasets and a seeded low-rank test-data generator.

Everything downstream consumes the row iterator; a file-backed dataset is
re-read from disk on every pass and nothing of size n x p is ever held in
memory for file-backed sources.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionError, ParseError, StreamError


@dataclass
class SparseRow:
    """One example: strictly increasing 0-based indices and finite values."""

    indices: np.ndarray
    values: np.ndarray
    label: Optional[float] = None

    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def norm2(self) -> float:
        return float(math.sqrt(np.dot(self.values, self.values)))


def make_row(indices, values, label=None) -> SparseRow:
    """Normalize raw index/value pairs into a SparseRow.

    Indices are sorted and duplicates summed; values must be finite.
    """
    idx = np.asarray(indices, dtype=np.int64)
    val = np.asarray(values, dtype=np.float64)
    if idx.shape != val.shape:
        raise DimensionError("indices and values differ in length")
    if idx.size and np.min(idx) < 0:
        raise DimensionError("negative feature index")
    if not np.all(np.isfinite(val)):
        raise ParseError("non-finite feature value")
    if idx.size:
        order = np.argsort(idx, kind="stable")
        idx = idx[order]
        val = val[order]
        uniq, inv = np.unique(idx, return_inverse=True)
        if uniq.shape[0] != idx.shape[0]:
            val = np.bincount(inv, weights=val)
            idx = uniq
    return SparseRow(idx, val, label)


class SparseDataset:
    """Row-major sparse matrix with a stable, restartable row iterator."""

    def __init__(self, source, n: int, p: int):
        self.source = source
        self.n = int(n)
        self.p = int(p)

    @classmethod
    def from_rows(cls, rows: Sequence[SparseRow], p: Optional[int] = None) -> "SparseDataset":
        max_idx = -1
        for r in rows:
            if r.indices.size:
                max_idx = max(max_idx, int(r.indices[-1]))
        if p is None:
            p = max_idx + 1
        elif max_idx >= p:
            raise DimensionError(f"row index {max_idx} >= declared p {p}")
        return cls(list(rows), len(rows), max(p, 0))

    def __iter__(self) -> Iterator[SparseRow]:
        return stream_rows(self)

    def __len__(self) -> int:
        return self.n


def _parse_line(line: str, lineno: int) -> SparseRow:
    toks = line.split()
    if not toks:
        raise ParseError("blank line", lineno)
    try:
        label = float(toks[0])
    except ValueError:
        raise ParseError(f"bad label token {toks[0]!r}", lineno) from None
    if not math.isfinite(label):
        raise ParseError("non-finite label", lineno)
    idx = []
    val = []
    for tok in toks[1:]:
        parts = tok.split(":")
        if len(parts) != 2:
            raise ParseError(f"bad feature token {tok!r}", lineno)
        try:
            i = int(parts[0])
            v = float(parts[1])
        except ValueError:
            raise ParseError(f"bad feature token {tok!r}", lineno) from None
        if i <= 0:
            raise ParseError(f"index {i} not positive (libsvm is 1-based)", lineno)
        if not math.isfinite(v):
            raise ParseError(f"non-finite value in token {tok!r}", lineno)
        idx.append(i - 1)
        val.append(v)
    try:
        return make_row(idx, val, label)
    except ParseError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_libsvm(path, declared_p: Optional[int] = None) -> SparseDataset:
    """Validate a libsvm text file and return a file-backed dataset.

    The whole file is parsed once up front (errors carry line numbers);
    subsequent iteration re-streams from disk.
    """
    n = 0
    max_idx = -1
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _parse_line(line, lineno)
            n += 1
            if row.indices.size:
                max_idx = max(max_idx, int(row.indices[-1]))
    p = max_idx + 1
    if declared_p is not None:
        if declared_p < p:
            raise DimensionError(
                f"declared p {declared_p} smaller than observed max index + 1 ({p})"
            )
        p = declared_p
    return SparseDataset(os.fspath(path), n, p)


def stream_rows(ds: SparseDataset) -> Iterator[SparseRow]:
    """Yield the dataset's rows in stable order; restartable."""
    if isinstance(ds.source, str):
        fh = open(ds.source, "rb")
        try:
            lineno = 0
            offset = 0
            while True:
                try:
                    line = fh.readline()
                except OSError as exc:
                    raise StreamError(str(exc), offset) from exc
                if not line:
                    break
                offset += len(line)
                lineno += 1
                text = line.decode("ascii", errors="replace")
                if not text.strip():
                    continue
                yield _parse_line(text, lineno)
        finally:
            fh.close()
    else:
        yield from ds.source


def iter_chunks(ds: SparseDataset, chunk_rows: int):
    """Yield (indptr, indices, values) CSR triplets for fixed-size row chunks.

    Chunk boundaries depend only on chunk_rows, which makes chunked
    accumulation orders canonical and reproducible.
    """
    buf: list[SparseRow] = []
    for row in stream_rows(ds):
        buf.append(row)
        if len(buf) == chunk_rows:
            yield _pack_chunk(buf)
            buf = []
    if buf:
        yield _pack_chunk(buf)


def _pack_chunk(rows):
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + r.nnz()
    indices = np.empty(indptr[-1], dtype=np.int64)
    values = np.empty(indptr[-1])
    for i, r in enumerate(rows):
        indices[indptr[i] : indptr[i + 1]] = r.indices
        values[indptr[i] : indptr[i + 1]] = r.values
    return indptr, indices, values


def write_libsvm(ds: SparseDataset, path) -> None:
    """Write rows as `label idx:val ...` with 1-based indices."""
    with open(path, "w") as fh:
        for row in stream_rows(ds):
            label = 0.0 if row.label is None else float(row.label)
            parts = [repr(label)]
            for i, v in zip(row.indices, row.values):
                parts.append(f"{int(i) + 1}:{float(v)!r}")
            fh.write(" ".join(parts) + "\n")


def densify(ds: SparseDataset) -> np.ndarray:
    """Materialize as a dense n x p array (desk-scale helper)."""
    X = np.zeros((ds.n, ds.p))
    for i, row in enumerate(stream_rows(ds)):
        X[i, row.indices] = row.values
    return X


def from_dense(X: np.ndarray, labels=None) -> SparseDataset:
    """Wrap a dense array as an in-memory dataset (zeros dropped)."""
    rows = []
    for i in range(X.shape[0]):
        nz = np.nonzero(X[i])[0]
        lab = None if labels is None else float(labels[i])
        rows.append(SparseRow(nz.astype(np.int64), X[i, nz].astype(np.float64), lab))
    return SparseDataset.from_rows(rows, p=X.shape[1])


def synth_lowrank(
    n: int,
    p: int,
    r: int,
    spectrum: Sequence[float],
    noise_sigma: float = 0.0,
    density: float = 1.0,
    seed: int = 0,
) -> SparseDataset:
    """Seeded planted-spectrum generator: sum_j s_j u_j v_j^T + noise, sparsified.

    u_j, v_j are random orthonormal; each entry is kept with probability
    `density`.  Deterministic given seed.
    """
    from .dense_linalg import gaussian_matrix, gram_schmidt

    if not (1 <= r <= min(n, p)):
        raise DimensionError("rank r must satisfy 1 <= r <= min(n, p)")
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.shape[0] != r:
        raise DimensionError("spectrum length must equal r")
    if np.any(spectrum <= 0) or np.any(np.diff(spectrum) > 0):
        raise DimensionError("spectrum must be positive and nonincreasing")
    if not (0.0 < density <= 1.0):
        raise DimensionError("density must be in (0, 1]")
    if noise_sigma < 0:
        raise DimensionError("noise_sigma must be nonnegative")

    su = _kernels.mix64(seed ^ 0x11)
    sv = _kernels.mix64(seed ^ 0x22)
    sn = _kernels.mix64(seed ^ 0x33)
    sm = _kernels.mix64(seed ^ 0x44)
    U = gram_schmidt(gaussian_matrix(n, r, su))
    V = gram_schmidt(gaussian_matrix(p, r, sv))
    X = (U * spectrum) @ V.T
    if noise_sigma > 0:
        X = X + noise_sigma * gaussian_matrix(n, p, sn)
    if density < 1.0:
        keep = _kernels.uniform_stream(sm, n * p).reshape(n, p) <= density
        X = np.where(keep, X, 0.0)
    return from_dense(X, labels=np.zeros(n))
