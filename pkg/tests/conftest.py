import numpy as np
import pytest
from hypothesis import settings

from skyrmion_transfer.tensor import OAM_A, POL_B, DensityOperator, StateVector

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")


def random_ket(rng, factors=(OAM_A, POL_B)):
    d = 2 ** len(factors)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector.normalized(factors, v)


def random_density(rng, factors=(OAM_A, POL_B), rank=None):
    d = 2 ** len(factors)
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityOperator(factors, 0.5 * (m + m.conj().T))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
