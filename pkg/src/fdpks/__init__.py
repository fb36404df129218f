"""Hybrid finite-difference / sticky-particle solver for one- and
two-species Patlak-Keller-Segel chemotaxis systems."""

from .domain import (
    Box,
    ConfigError,
    ConstantField,
    GaussianBump,
    Grid,
    NumericalError,
    OutsideDomainError,
    Particle,
    ParticleSystem,
    SimulationConfig,
    SpeciesParticles,
    locate_cell,
    validate,
)
from .integrator import RunResult, SimState, SimulationError, Snapshot, advance_step, run

__all__ = [
    "Box",
    "ConfigError",
    "ConstantField",
    "GaussianBump",
    "Grid",
    "NumericalError",
    "OutsideDomainError",
    "Particle",
    "ParticleSystem",
    "RunResult",
    "SimState",
    "SimulationConfig",
    "SimulationError",
    "Snapshot",
    "SpeciesParticles",
    "advance_step",
    "locate_cell",
    "run",
    "validate",
]

__version__ = "0.1.0"
