import pytest

from revshoot import ShotConfig, known_solutions


@pytest.fixture(scope="session")
def solutions():
    return known_solutions()


@pytest.fixture(scope="session")
def sech(solutions):
    return solutions["sech"]


@pytest.fixture(scope="session")
def sech2(solutions):
    return solutions["sech2"]


@pytest.fixture(scope="session")
def cfg():
    return ShotConfig()
