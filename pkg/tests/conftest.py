import os

# Pin BLAS threading before numpy loads: trials are the unit of parallelism
# and single-threaded kernels keep results reproducible and fast at this size.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from rgnn.gso import Gso, project_gso  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_gso(rng, n, density=0.3) -> Gso:
    """Random unweighted valid shift operator."""
    mat = (rng.random((n, n)) < density).astype(float)
    return project_gso(np.triu(mat, k=1) + np.triu(mat, k=1).T)


def cycle_gso(n) -> Gso:
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i, (i + 1) % n] = 1.0
        mat[(i + 1) % n, i] = 1.0
    return Gso(mat)


def path_gso(n) -> Gso:
    mat = np.zeros((n, n))
    for i in range(n - 1):
        mat[i, i + 1] = 1.0
        mat[i + 1, i] = 1.0
    return Gso(mat)
