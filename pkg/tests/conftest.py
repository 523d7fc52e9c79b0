import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

EPR_ALPHA = 1 / math.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(num_qubits, rng, labels=None):
    from entconc.statevec import StateVector, default_labels

    v = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    v /= np.linalg.norm(v)
    return StateVector(v, labels or default_labels(num_qubits))
