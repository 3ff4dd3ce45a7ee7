import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_low_rank(rng, rows, cols, r):
    if r == 0:
        return np.zeros((rows, cols))
    return rng.standard_normal((rows, r)) @ rng.standard_normal((r, cols))
