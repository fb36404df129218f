"""Plotting scripts for the hybrid finite-difference/particle simulator's
snapshot, particle, and time-series files."""

from .io import FieldData, FormatError, ParticleData, SeriesData, read_field, read_particles, read_series
from .plot_field import plot_field
from .plot_max_series import plot_max_series
from .plot_particles import plot_particles

__all__ = [
    "FieldData",
    "FormatError",
    "ParticleData",
    "SeriesData",
    "plot_field",
    "plot_max_series",
    "plot_particles",
    "read_field",
    "read_particles",
    "read_series",
]
