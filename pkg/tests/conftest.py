import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fdpks.domain import Box, ConstantField, GaussianBump, SimulationConfig, validate


def basic_config(**overrides) -> SimulationConfig:
    """A small valid two-species parabolic configuration for unit tests."""
    defaults = dict(
        tau=1,
        chi=(5.0, 60.0),
        nu_rho=(1.0, 1.0),
        nu_c=10.0,
        gamma=(1.0, 1.0),
        zeta=1.0,
        n_species=2,
        box=Box(-1.0, 1.0, -1.0, 1.0),
        delta=2.0 / 15.0,
        final_time=2e-4,
        initial_density=(GaussianBump(500.0), GaussianBump(500.0)),
        initial_c=ConstantField(1.0),
    )
    defaults.update(overrides)
    return validate(SimulationConfig(**defaults))


def single_species_config(**overrides) -> SimulationConfig:
    defaults = dict(
        tau=1,
        chi=(1.0,),
        nu_rho=(1.0,),
        nu_c=1.0,
        gamma=(1.0,),
        zeta=1.0,
        n_species=1,
        box=Box(-0.5, 0.5, -0.5, 0.5),
        delta=1.0 / 10.0,
        final_time=1e-3,
        initial_density=(GaussianBump(500.0, center=(0.25, 0.25)),),
        initial_c=ConstantField(0.0),
    )
    defaults.update(overrides)
    return validate(SimulationConfig(**defaults))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
