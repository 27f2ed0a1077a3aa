import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from markov_cusum.experiments import DEFAULT_MU0, DEFAULT_MU1
from markov_cusum.markov_core import MarkovModel

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def mu0():
    return MarkovModel(np.array(DEFAULT_MU0))


@pytest.fixture(scope="session")
def mu1():
    return MarkovModel(np.array(DEFAULT_MU1))


def binary_entropy(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)
