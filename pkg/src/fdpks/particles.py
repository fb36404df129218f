"""Particle initialization and the right-hand side of the particle ODEs.

Cell densities are carried by weighted particles: positions drift with the
sampled velocity, subdomain areas follow the sampled velocity divergence,
and weights exchange mass through a Gaussian kernel whose width adapts to
the local pair of subdomain areas.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .domain import (
    ParticleSystem,
    SimulationConfig,
    SpeciesDerivative,
    SpeciesKinematics,
    SpeciesParticles,
    StateDerivative,
)
from .merger import SpatialHash


class DiffusionKernel:
    """Stateless Gaussian interaction kernel eta(x) = (4/pi) exp(-|x|^2)."""

    @staticmethod
    def eta(dx, dy):
        return (4.0 / np.pi) * np.exp(-(np.asarray(dx) ** 2 + np.asarray(dy) ** 2))

    @staticmethod
    def eta_sigma(dx, dy, sigma):
        """Rescaled kernel eta(x / sigma) / sigma^2."""
        sigma = np.asarray(sigma, dtype=float)
        return DiffusionKernel.eta(dx / sigma, dy / sigma) / sigma**2


def sigma_pair(area_i: float, area_j: float) -> float:
    """Kernel width for one particle pair: sqrt of the mean subdomain area."""
    if not (area_i > 0 and area_j > 0):
        raise ValueError(f"subdomain areas must be positive, got {area_i}, {area_j}")
    return float(np.sqrt(0.5 * (area_i + area_j)))


def init_particles(cfg: SimulationConfig) -> ParticleSystem:
    """One particle per cell of the delta/4 lattice, per species.

    Positions are the lattice cell centers; weights come from the midpoint
    rule ``w = rho_k(center) * cell_area``.  Cells where the initial density
    vanishes still get a (zero-weight) particle: vacuum regions can gain
    mass through diffusion later.
    """
    h = cfg.particle_mesh_size
    nx, ny = cfg.grid_shape()
    npx, npy = nx * 4, ny * 4
    xs = cfg.box.x_lo + (np.arange(npx) + 0.5) * h
    ys = cfg.box.y_lo + (np.arange(npy) + 0.5) * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    x = X.ravel()
    y = Y.ravel()
    cell_area = h * h
    species = []
    for k in range(cfg.n_species):
        w = np.asarray(cfg.initial_density[k](x, y), dtype=float) * cell_area
        if np.any(w < 0):
            raise ValueError(f"initial density of species {k + 1} is negative somewhere")
        species.append(SpeciesParticles(x.copy(), y.copy(), w, np.full(x.size, cell_area)))
    return ParticleSystem(species, min_initial_area=cell_area)


def diffusion_weight_rhs_with_rates(
    ps: ParticleSystem, cfg: SimulationConfig
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Weight rates plus each particle's total outgoing exchange rate.

    The outgoing rate ``nu * sum_j eta_sigma(x_i - x_j) * area_j / sigma^2``
    is the Gershgorin diagonal of the exchange operator acting on point
    densities; its inverse bounds the stable explicit time step.
    """
    rates = []
    diags = []
    for k, sp in enumerate(ps.species):
        nu = cfg.nu_rho[k]
        if sp.n == 0:
            beta, diag = np.zeros(0), np.zeros(0)
        elif not cfg.use_kernel_cutoff or sp.n < 2:
            beta, diag = _kernels.diffusion_beta_full(sp.x, sp.y, sp.w, sp.area, nu)
        else:
            h = cfg.particle_mesh_size
            hs = SpatialHash.build(sp.x, sp.y, cfg.box, h)
            beta, diag = _kernels.diffusion_beta_hashed(
                sp.x, sp.y, sp.w, sp.area, nu,
                hs.cellx, hs.celly, hs.order, hs.start, hs.ncx, hs.ncy, h,
            )
        rates.append(beta)
        diags.append(diag)
    return rates, diags


def diffusion_weight_rhs(ps: ParticleSystem, cfg: SimulationConfig) -> list[np.ndarray]:
    """Per-particle weight rates from pairwise mass exchange, per species.

    Same-species pairs only.  With the cutoff enabled, pairs farther apart
    than four kernel widths are skipped (relative contribution below
    exp(-16)); candidates come from the shared spatial hash.
    """
    return diffusion_weight_rhs_with_rates(ps, cfg)[0]


def particle_rhs(
    ps: ParticleSystem,
    kin: list[SpeciesKinematics],
    cfg: SimulationConfig,
    beta: list[np.ndarray] | None = None,
) -> StateDerivative:
    """Assemble the particle state derivative from sampled kinematics.

    ``kin`` must be index-aligned with ``ps``; ``beta`` may be passed in if
    the weight rates were already computed for the time-step bounds.
    """
    if len(kin) != ps.n_species:
        raise ValueError("kinematics must cover every species")
    if beta is None:
        beta = diffusion_weight_rhs(ps, cfg)
    species = []
    for sp, kk, bb in zip(ps.species, kin, beta):
        if not (len(kk.u) == len(kk.v) == len(kk.r) == sp.n == len(bb)):
            raise ValueError("kinematics/weight-rate arrays misaligned with particles")
        species.append(SpeciesDerivative(u=kk.u, v=kk.v, beta=bb, darea=kk.r * sp.area))
    return StateDerivative(species=species)
