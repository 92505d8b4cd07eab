import numpy as np
import pytest

from opmult.config import get_settings
from opmult.grid import make_grid
from opmult.weights import Weight


@pytest.fixture(scope="session", autouse=True)
def default_settings():
    # Pin the numerical defaults so an .env file in the working directory cannot change test outcomes
    settings = get_settings()
    settings.default_seed = 0
    settings.workers = 1
    settings.exhaustive_sign_limit = 12
    settings.monte_carlo_samples = 1000
    settings.exceptional_fraction = 0.005
    settings.sparse_beta = 16.0


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


@pytest.fixture()
def grid1():
    return make_grid(1, 256, 16)


@pytest.fixture()
def grid2():
    return make_grid(2, 64, 8)


@pytest.fixture()
def hilbert_grid():
    return make_grid(1, 4096, 40)


@pytest.fixture()
def sqrt_weight():
    """|x|^(1/2), an A_2 weight"""
    return Weight.power(0.5)
