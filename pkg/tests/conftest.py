import pytest

from fockforge import GridSpec


@pytest.fixture
def wrap1():
    return GridSpec(dim=1, n_max=1, boundary_mode="wrap")


@pytest.fixture
def trunc2():
    return GridSpec(dim=1, n_max=2)
