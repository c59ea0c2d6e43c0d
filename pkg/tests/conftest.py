import numpy as np
import pytest

from relspin.grid import GridSpec
from relspin.operators import PhysParams


@pytest.fixture(scope="session")
def params():
    return PhysParams()


@pytest.fixture(scope="session")
def grid_1d():
    return GridSpec(1, 512, 256.0)


@pytest.fixture(scope="session")
def grid_3d():
    return GridSpec(3, 32, 48.0)


@pytest.fixture(scope="session")
def battery_1d(grid_1d, params):
    from relspin.dynamics import standard_battery
    return standard_battery(grid_1d, params)


@pytest.fixture(scope="session")
def battery_3d(grid_3d, params):
    from relspin.dynamics import standard_battery
    return standard_battery(grid_3d, params)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(771)
