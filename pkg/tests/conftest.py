import numpy as np
import pytest

from vaisflow.grid import GridSpec

TWO_PI = 2.0 * np.pi


def basic_spec(n=1, res=64):
    return GridSpec(n, (res,) * (2 * n), (TWO_PI,) * (2 * n))


def full_spec(n=1, res=64, leaf=8):
    return GridSpec(
        n, (res,) * (2 * n), (TWO_PI,) * (2 * n),
        leaf_resolution=(leaf, leaf), leaf_periods=(TWO_PI, TWO_PI),
    )


@pytest.fixture
def spec64():
    return basic_spec(res=64)


@pytest.fixture
def spec128():
    return basic_spec(res=128)
