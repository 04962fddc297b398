import pytest
from _fixtures import linear_fixture

from cascadepair import presets


@pytest.fixture
def model():
    return presets.tfln_model()


@pytest.fixture
def spec():
    return presets.tfln_waveguide()


@pytest.fixture
def linear():
    return linear_fixture()
