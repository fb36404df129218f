"""Admissible time step from the stability restrictions.

Three particle restrictions (weights stay nonnegative, subdomain areas
shrink by at most a factor of two, nobody travels farther than one search
cell) plus the explicit diffusive bound for the parabolic chemoattractant
update.  The trajectory-intersection restriction is deliberately not a
bound: clustering pairs are merged up front instead, which that restriction
would otherwise push dt to zero for.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import Grid, NumericalError, ParticleSystem, SimulationConfig, SpeciesKinematics


class TimeStepError(NumericalError):
    """The admissible step degenerated to zero (or below)."""


def dt_weight_positivity(ps: ParticleSystem, beta: list[np.ndarray]) -> float:
    """Largest forward-Euler step keeping every weight nonnegative.

    Per species, min over particles with a negative weight rate of
    ``-w / beta``; +inf when no rate is negative.
    """
    bound = math.inf
    for sp, b in zip(ps.species, beta):
        if len(b) != sp.n:
            raise ValueError("weight rates misaligned with particles")
        neg = b < 0
        if np.any(neg):
            bound = min(bound, float(np.min(-sp.w[neg] / b[neg])))
    return bound


def dt_area_decay(ps: ParticleSystem, r: list[np.ndarray], area_floor: float = 0.0) -> float:
    """Largest step keeping every subdomain area above half its value:
    min over particles with negative divergence of ``-1 / (2 r)``.

    Particles already at the area floor are pinned there and no longer
    constrain the step (their divergence can grow without bound as the
    recovered density at a resolved point mass does).
    """
    bound = math.inf
    for sp, rr in zip(ps.species, r):
        if len(rr) != sp.n:
            raise ValueError("divergence samples misaligned with particles")
        neg = (rr < 0) & (sp.area > area_floor)
        if np.any(neg):
            bound = min(bound, float(np.min(-1.0 / (2.0 * rr[neg]))))
    return bound


def dt_displacement(ps: ParticleSystem, kin: list[SpeciesKinematics]) -> float:
    """Largest step keeping one-step travel below one search cell:
    ``sqrt(min initial area) / max velocity component``."""
    vmax = 0.0
    for kk in kin:
        if kk.u.size:
            vmax = max(vmax, float(np.max(np.abs(kk.u))), float(np.max(np.abs(kk.v))))
    if vmax == 0.0:
        return math.inf
    return math.sqrt(ps.min_initial_area) / vmax


def dt_parabolic(cfg: SimulationConfig, grid: Grid) -> float:
    """Explicit diffusive bound ``min(dx, dy)^2 / (4 nu)`` for the
    chemoattractant update; +inf in the elliptic case."""
    if cfg.tau == 0:
        return math.inf
    return min(grid.dx, grid.dy) ** 2 / (4.0 * cfg.nu_c)


def dt_exchange_stability(exchange_diag: list[np.ndarray]) -> float:
    """Stability bound for the explicit weight-exchange update.

    On point densities the exchange is a weighted graph Laplacian whose
    eigenvalues lie in ``[-2 * max_i diag_i, 0]`` (Gershgorin), so a forward
    Euler step — and hence any convex-combination stage sequence — is stable
    for ``dt <= 1 / max_i diag_i``.  Without this bound, compressed particle
    clusters develop a growing alternating weight mode: pure diffusion that
    raises the local density maximum, which the exact exchange flow can
    never do.
    """
    dmax = 0.0
    for d in exchange_diag:
        if d.size:
            dmax = max(dmax, float(d.max()))
    if dmax == 0.0:
        return math.inf
    return 1.0 / dmax


def compute_dt(bounds, cfg: SimulationConfig, t: float, next_event: float | None = None) -> float:
    """Safety-scaled minimum of all bounds, capped to land exactly on the
    next snapshot time or the final time.

    A zero bound means a degenerate particle (zero weight with strictly
    negative weight rate) slipped through; that is an error, not a step.
    """
    bound = min(bounds)
    if bound <= 0:
        raise TimeStepError(
            "time step bound is zero: remove degenerate particles "
            "(zero weight with negative weight rate) before stepping"
        )
    dt = cfg.safety_factor * bound
    if next_event is not None:
        remaining = next_event - t
        if remaining <= 0:
            raise TimeStepError(f"next event time {next_event} is not ahead of t={t}")
        dt = min(dt, remaining)
    if not dt > 0 or not math.isfinite(dt):
        raise TimeStepError(f"admissible time step is not positive and finite: {dt}")
    return dt
