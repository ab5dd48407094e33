import numpy as np
import pytest

from shocklayer import Box, GasModel, PowerLaw, State


@pytest.fixture
def gas():
    """Default model: R = 1, gamma = 1.4, constant unit viscosity and conductivity."""
    return GasModel()


@pytest.fixture
def power_gas():
    """Density-dependent transport laws, exercising the nu', k' terms."""
    return GasModel(
        nu_law=PowerLaw(0.8, 0.5),
        k_law=PowerLaw(1.3, -0.25),
    )


@pytest.fixture
def box():
    return Box(rho=(0.5, 2.0), v=(-1.0, 1.0), theta=(0.5, 2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def sample_states(box, n, rng):
    return box.sample(n, rng)


@pytest.fixture
def left_state():
    return State(1.0, 0.0, 1.0)
