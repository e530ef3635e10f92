import numpy as np
import pytest

from uupl.calibration import default_curve, default_uncertainty_factors


@pytest.fixture(scope="session")
def curve():
    return default_curve()


@pytest.fixture(scope="session")
def factors(curve):
    return default_uncertainty_factors(curve)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
