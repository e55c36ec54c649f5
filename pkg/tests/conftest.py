import pytest

from boxlab.core import Scenario
from boxlab.enumeration import enumerate_effects_01, enumerate_identity_reps_01

BI = Scenario(2, 2, 2)
TRI = Scenario(3, 2, 2)


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", help="run hour-scale enumerations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def ids_222():
    return enumerate_identity_reps_01(BI)


@pytest.fixture(scope="session")
def ids_322():
    return enumerate_identity_reps_01(TRI)


@pytest.fixture(scope="session")
def cat_222():
    return enumerate_effects_01(BI)


@pytest.fixture(scope="session")
def cat_322(ids_322):
    return enumerate_effects_01(TRI, identities=ids_322)


@pytest.fixture(scope="session")
def reduced_322():
    return enumerate_effects_01(TRI, symmetry_reduce=True)
