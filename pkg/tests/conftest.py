import numpy as np
import pytest

from kineticlab.velocity_space import build_velocity_grid


@pytest.fixture(scope="session")
def grid_default():
    """Solver-resolution grid (the sweep configuration)."""
    return build_velocity_grid((16, 12, 12), 6.0, 1.2)


@pytest.fixture(scope="session")
def grid_fine():
    """Wide high-accuracy grid for quadrature-oracle comparisons."""
    return build_velocity_grid((24, 24, 24), 8.0, 1.0)


@pytest.fixture(scope="session")
def grid_coarse():
    """Small grid for dense hard-sphere operator tests."""
    return build_velocity_grid((10, 10, 10), 6.0, 1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
