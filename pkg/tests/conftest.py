import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h, w):
    return rng.random((h, w))
