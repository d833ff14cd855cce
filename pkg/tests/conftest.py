import numpy as np
import pytest

from homdip.presets import preset_config


@pytest.fixture(scope="session")
def s1():
    return preset_config("S1")


@pytest.fixture(scope="session")
def s2():
    return preset_config("S2")


@pytest.fixture(scope="session")
def s3():
    return preset_config("S3")


@pytest.fixture(scope="session")
def taus():
    return np.linspace(-300.0, 300.0, 241)
