"""Truncated PCA for very wide sparse data: a non-materialized sign-hash
projection composed with a two-pass randomized SVD, plus diagnostics that
measure the hashed subspace against the exact one."""

from ._kernels import get_backend, mix64, set_backend
from .dense_linalg import (
    EigenDecomposition,
    gaussian_matrix,
    gram_schmidt,
    oracle_svd,
    pinv_diag,
    sym_eig,
)
from .diagnostics import (
    DiagnosticsReport,
    ExactReference,
    canonical_angles,
    coherence_eta,
    compare_to_exact,
    exact_reference,
    eta_threshold,
    gram_perturbation,
    recommended_dim,
)
from .errors import (
    AsymmetricError,
    DimensionError,
    GuardError,
    HpcaError,
    ModelFormatError,
    NoConvergenceError,
    ParseError,
    RankDeficientError,
    StreamError,
)
from .hashing import HashSpec, IdentityHash, apply_hash, derive_seeds, hash_index, identity_hash
from .hpca_core import (
    HpcaConfig,
    PassAccumulator,
    PcaModel,
    accumulate_pass,
    finalize_pass,
    fit,
    fit_transform,
    load_model,
    mean_pass,
    project_unwhitened,
    project_whitened,
    run_pass,
    save_model,
    working_set_bytes,
)
from .sparse_io import (
    SparseDataset,
    SparseRow,
    densify,
    from_dense,
    make_row,
    parse_libsvm,
    stream_rows,
    synth_lowrank,
    write_libsvm,
)

__version__ = "0.1.0"
