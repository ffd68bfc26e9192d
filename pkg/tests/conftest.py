import os

# Single-threaded BLAS: the suite runs many small eigenproblems where thread
# fan-out costs more than it saves, and deterministic timing helps CI.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20230817)


def random_density(rng, dim: int) -> np.ndarray:
    """Random full-rank density matrix (Ginibre construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def assert_multisets_close(a, b, atol):
    """Greedy nearest-neighbor match of two complex multisets."""
    a = np.asarray(a, dtype=complex).copy()
    b = list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    for x in a:
        dists = np.abs(np.array(b) - x)
        j = int(np.argmin(dists))
        assert dists[j] < atol, f"value {x} has no partner within {atol} (closest {dists[j]})"
        b.pop(j)


@pytest.fixture
def make_density():
    return random_density


@pytest.fixture
def make_hermitian():
    return random_hermitian
