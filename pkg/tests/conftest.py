import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def observed_order(errors, factor=2.0):
    """log_factor of successive error ratios."""
    e = np.asarray(errors, float)
    return np.log(e[:-1] / e[1:]) / math.log(factor)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_unit(rng, shape=()):
    v = rng.normal(size=tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
