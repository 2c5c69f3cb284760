import numpy as np
import pytest

from cmflows.space import chart_to_hat, sample_charts


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def hermitian_samples(n, count, seed=0, box=5.0):
    rng = np.random.default_rng(seed)
    return [chart_to_hat(c) for c in sample_charts(n, count, rng, box=box)]


def random_hermitian(n, rng):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (Z + Z.conj().T) / 2
