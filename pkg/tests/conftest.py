import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_density_matrix(rng, dim, rank=None):
    rank = rank or dim
    w = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = w @ w.conj().T
    return rho / np.trace(rho).real
