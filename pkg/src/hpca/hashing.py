"""Non-materialized sign-hash projection H applied to sparse rows.

H_ij = xi(i) * 1[h(i) = j], with h and xi derived from two independent
seeds through the splitmix64 finalizer.  Applying H^T x costs O(nnz(x))
hash evaluations and one length-d output; nothing of size p exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import hash_indices, mix64
from .errors import DimensionError
from .sparse_io import SparseRow


@dataclass(frozen=True)
class HashSpec:
    """Seeded projection to d buckets; identical seeds give identical output
    on every platform."""

    d: int
    seed_h: int
    seed_xi: int

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError("d must be >= 1")

    def hash_row(self, indices: np.ndarray):
        return hash_indices(indices, self.seed_h, self.seed_xi, self.d)

    def header_fields(self):
        return ("hash", self.d, self.seed_h, self.seed_xi)


@dataclass(frozen=True)
class IdentityHash:
    """H = I test projector; only legal with d = p."""

    p: int

    @property
    def d(self) -> int:
        return self.p

    def hash_row(self, indices: np.ndarray):
        if indices.size and int(np.max(indices)) >= self.p:
            raise DimensionError(
                f"identity hash: index {int(np.max(indices))} >= p {self.p}"
            )
        return indices.astype(np.int64), np.ones(indices.shape[0])

    def header_fields(self):
        return ("identity", self.p)


def identity_hash(p: int) -> IdentityHash:
    if p < 1:
        raise DimensionError("p must be >= 1")
    return IdentityHash(p)


def hash_index(spec, i: int):
    """(bucket, sign) for a single feature id."""
    if i < 0:
        raise DimensionError("feature id must be nonnegative")
    buckets, signs = spec.hash_row(np.array([i], dtype=np.int64))
    return int(buckets[0]), int(signs[0])


def apply_hash(spec, x: SparseRow) -> np.ndarray:
    """Dense length-d image H^T x; collisions accumulate additively."""
    out = np.zeros(spec.d)
    if x.nnz() == 0:
        return out
    buckets, signs = spec.hash_row(x.indices)
    np.add.at(out, buckets, signs * x.values)
    return out


def derive_seeds(master: int):
    """Expand one master seed into (seed_h, seed_xi, seed_omega)."""
    return mix64(master ^ 1), mix64(master ^ 2), mix64(master ^ 3)
