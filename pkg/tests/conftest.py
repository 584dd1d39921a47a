import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("cohroof", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("cohroof")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
