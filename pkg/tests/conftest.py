import numpy as np
import pytest

import hpca


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger numba compilation once so per-test timings measure the
    algorithms, not the JIT."""
    rows = [hpca.make_row([0, 3], [1.0, -2.0]), hpca.make_row([1], [0.5])]
    ds = hpca.SparseDataset.from_rows(rows, p=8)
    cfg = hpca.HpcaConfig(k=1, d=4, hash=hpca.HashSpec(4, 1, 2), seed_omega=3)
    hpca.fit_transform(ds, cfg)
    hpca.sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    hpca.coherence_eta(ds)


@pytest.fixture
def toy_diag_dataset():
    """X = [[2,0],[0,0]]: the hand-traced worked example."""
    rows = [hpca.make_row([0], [2.0], label=1.0), hpca.make_row([], [], label=0.0)]
    return hpca.SparseDataset.from_rows(rows, p=2)
