import numpy as np
import pytest

from tanconn.bundle import Samples


@pytest.fixture
def samples():
    return Samples(seed=42, count=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
