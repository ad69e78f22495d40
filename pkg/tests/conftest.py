import math

import pytest

from spinbench.quantum import Direction, SpinCoefficients
from spinbench.scenario import ScenarioConfig, run_measurement
from spinbench.solver import Grid1D, init_gaussian_packet


@pytest.fixture(scope="session")
def fast_config():
    """Reduced-cost scenario for unit tests (coarser grid, small ensemble)."""
    return ScenarioConfig(n_points=2048, n_samples=800, seed=7)


@pytest.fixture(scope="session")
def grid():
    return Grid1D(-40.0, 40.0, 2048)


@pytest.fixture(scope="session")
def gaussian_field(grid):
    return init_gaussian_packet(grid, 0.0, 1.0, 0.0, SpinCoefficients.up())


@pytest.fixture(scope="session")
def sg_run_60(fast_config):
    """One full Stern-Gerlach measurement at 60 degrees, shared across tests."""
    cfg = ScenarioConfig(**{**fast_config.to_dict(), "spin_theta": math.radians(60.0)})
    return cfg, run_measurement(cfg, Direction(0.0), record_every=50)
