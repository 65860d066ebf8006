import numpy as np
import pytest

from spdkalman import SpdMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, n, shift=None):
    """Well-conditioned random SPD matrix of side n."""
    a = rng.standard_normal((n, n))
    if shift is None:
        shift = n
    return SpdMatrix(a @ a.T + shift * np.eye(n))


def random_sym(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a + a.T) / 2.0
