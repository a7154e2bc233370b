import numpy as np
from pytest import fixture


@fixture
def rng():
    return np.random.default_rng(1234)


def random_unit(size, rng, real=False):
    v = rng.standard_normal(size)
    if not real:
        v = v + 1j * rng.standard_normal(size)
    return v / np.linalg.norm(v)
