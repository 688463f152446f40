import pytest

from rlnd import load_bundled_instance
from rlnd.scenarios import builtin_scenarios, materialize


@pytest.fixture(scope="session")
def bundled():
    return load_bundled_instance()


@pytest.fixture(scope="session")
def tight40(bundled):
    return materialize(builtin_scenarios()["capacity-40"], bundled)
