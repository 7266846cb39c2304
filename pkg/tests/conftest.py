import numpy as np
import pytest

from etfkit.core import frame_from_gram, gram_from_signature, spec_from_dn
from etfkit.solver import SolverConfig, solve_signature


def simplex_frame(d: int) -> np.ndarray:
    """Regular simplex: d+1 unit vectors in R^d with pairwise inner product -1/d."""
    e = np.eye(d + 1) - 1.0 / (d + 1)
    # orthonormal basis of the sum-zero hyperplane
    q, _ = np.linalg.qr(e[:, :d])
    v = q.T @ e
    return v / np.linalg.norm(v, axis=0)


@pytest.fixture(scope="session")
def solved():
    cache = {}

    def get(d, n, real=False):
        key = (d, n, real)
        if key not in cache:
            res = solve_signature(spec_from_dn(d, n, real), SolverConfig(seeds=200))
            assert res.converged, key
            cache[key] = res
        return cache[key]

    return get


@pytest.fixture(scope="session")
def sic24_gram(solved):
    return gram_from_signature(solved(2, 4).signature, 2)


@pytest.fixture(scope="session")
def sic416_frame(solved):
    return frame_from_gram(gram_from_signature(solved(4, 16).signature, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
