import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from holofourier import GroupSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def torus():
    return GroupSpec.of("torus")


@pytest.fixture(scope="session")
def sl2():
    return GroupSpec.of("sl2")


@pytest.fixture(scope="session")
def mixed():
    return GroupSpec.of("torus", "sl2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
