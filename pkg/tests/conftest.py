import numpy as np
import pytest

from rebalance.tabular import CONTINUOUS, NOMINAL, Dataset


def make_data(x, y, nominal=()):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    kinds = [NOMINAL if j in nominal else CONTINUOUS for j in range(x.shape[1])]
    return Dataset.from_arrays(x, y, kinds)


def random_data(rng, n, d=2, p_minority=0.3, nominal=(), n_categories=3):
    x = rng.normal(size=(n, d))
    for j in nominal:
        x[:, j] = rng.integers(0, n_categories, n)
    y = (rng.random(n) < p_minority).astype(int)
    y[:2] = [0, 1]
    y[2:4] = [1, 0]
    return make_data(x, y, nominal)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
