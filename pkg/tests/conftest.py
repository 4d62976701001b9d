import numpy as np
import pytest

from weaktraj.classical import default_potential, make_grid
from weaktraj.propagation import propagate_superposition

MOMENTA = [(0.32, (17.0, 7.0)), (0.35, (-7.0, 15.0)), (0.33, (0.0, 15.0))]
DELTA = 1.3


@pytest.fixture(scope="session")
def params():
    return default_potential()


@pytest.fixture(scope="session")
def grid_short():
    return make_grid(0.0, 1.0, 1e-3)


@pytest.fixture(scope="session")
def psi_short(params, grid_short):
    """Three-branch superposition on a short grid (fast shared fixture)."""
    return propagate_superposition(MOMENTA, np.zeros(2), DELTA, params,
                                   grid_short)
