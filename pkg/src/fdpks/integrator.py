"""The coupled time loop.

Each step: evaluate the right-hand side once to get the stability bounds,
merge pairs whose trajectories would cross within the step, then advance
with three-stage third-order SSP Runge-Kutta.  After every stage the
particles are pulled back into the domain and the merger grid is collapsed;
in the elliptic case the chemoattractant is re-solved.

Stage values are convex combinations of the step-start state with a
forward-Euler update.  Because a stage's merger re-indexes the particles,
the step-start copy is collapsed with the same groupings (center of mass by
its own weights), so later combinations stay index-aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chemo_fd import chemo_rhs, solve_elliptic
from .domain import (
    Box,
    Grid,
    NumericalError,
    ParticleSystem,
    SimulationConfig,
    SpeciesParticles,
    StateDerivative,
    validate,
)
from .merger import (
    MergerGrid,
    collapse_arrays,
    merger_step1_counted,
    merger_step2_with_groups,
    pull_back,
)
from .particles import diffusion_weight_rhs_with_rates, init_particles, particle_rhs
from .projection import DerivativeFields, particles_to_grid, sample_particle_velocity, source_density
from .timestep import (
    compute_dt,
    dt_area_decay,
    dt_displacement,
    dt_exchange_stability,
    dt_parabolic,
    dt_weight_positivity,
)

# Shu-Osher stage coefficients (a, b): stage value = a*y0 + b*(Euler step)
SHU_OSHER = ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))

# scale factor for the intersection-detection degeneracy threshold,
# applied to the squared maximum particle speed
MU_FACTOR = 1e-12

# a step this far below the final time means the run has stalled
DT_COLLAPSE_FRACTION = 1e-15


class SimulationError(NumericalError):
    """A run aborted; ``partial`` holds everything computed so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass
class SimState:
    t: float
    ps: ParticleSystem
    c: np.ndarray


@dataclass
class Snapshot:
    """Timestamped dump of the grid fields and the raw particles."""

    t: float
    box: Box
    c: np.ndarray
    rho: list[np.ndarray]
    particles: list[SpeciesParticles]


@dataclass
class StepInfo:
    dt: float
    merges_step1: int = 0
    merges_step2: int = 0
    clipped_mass: float = 0.0
    min_weight_pre_clip: float = math.inf
    capped_to_event: bool = False


@dataclass
class TimeSeries:
    """Per-step diagnostics, one list entry per completed step."""

    t: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    counts: list[tuple[int, ...]] = field(default_factory=list)
    mass: list[tuple[float, ...]] = field(default_factory=list)
    max_rho: list[tuple[float, ...]] = field(default_factory=list)
    max_part: list[tuple[float, ...]] = field(default_factory=list)
    max_c: list[float] = field(default_factory=list)
    max_weight_fraction: list[tuple[float, ...]] = field(default_factory=list)
    min_weight: list[float] = field(default_factory=list)
    clipped_mass: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class RunResult:
    cfg: SimulationConfig
    grid: Grid
    snapshots: list[Snapshot]
    series: TimeSeries
    state: SimState


def ssp_rk3_step(y0, dt, f):
    """One bare SSP-RK3 step for scalar or ndarray states (no particles).

    Convex combinations are evaluated as ``y0 + b*(e - y0)``, which agrees
    with ``a*y0 + b*e`` to rounding but leaves a state with zero derivative
    bit-for-bit unchanged.
    """
    y = y0
    for a, b in SHU_OSHER:
        e = y + dt * f(y)
        y = e if a == 0.0 else y0 + b * (e - y0)
    return y


@dataclass
class _Stage:
    ps: ParticleSystem
    c: np.ndarray


def _evaluate_rhs(ps: ParticleSystem, c, cfg, grid):
    """Full right-hand side at one state; also returns the recovered fields,
    sampled kinematics, and exchange-rate diagonals for reuse by bounds and
    merger."""
    rhos = source_density(ps, grid)
    dfields = DerivativeFields.from_c(c, grid)
    kin = sample_particle_velocity(ps, dfields, cfg)
    beta, diag = diffusion_weight_rhs_with_rates(ps, cfg)
    deriv = particle_rhs(ps, kin, cfg, beta)
    if cfg.tau == 1:
        deriv.dc = chemo_rhs(c, rhos, cfg, grid)
    return deriv, rhos, kin, diag


def _euler(s: _Stage, dt: float, deriv: StateDerivative, cfg) -> _Stage:
    floor = cfg.area_floor
    species = []
    for sp, d in zip(s.ps.species, deriv.species):
        species.append(
            SpeciesParticles(
                sp.x + dt * d.u,
                sp.y + dt * d.v,
                sp.w + dt * d.beta,
                np.maximum(sp.area + dt * d.darea, floor),
            )
        )
    c = s.c + dt * deriv.dc if cfg.tau == 1 else s.c.copy()
    return _Stage(ParticleSystem(species, s.ps.min_initial_area), c)


def _combine(a: float, y0: _Stage, b: float, e: _Stage, cfg) -> _Stage:
    # lerp form of a*y0 + b*e (a + b = 1): exact identity when e == y0
    def lerp(p, q):
        return p + b * (q - p)

    species = []
    for sp0, spe in zip(y0.ps.species, e.ps.species):
        species.append(
            SpeciesParticles(
                lerp(sp0.x, spe.x),
                lerp(sp0.y, spe.y),
                lerp(sp0.w, spe.w),
                lerp(sp0.area, spe.area),
            )
        )
    c = lerp(y0.c, e.c) if cfg.tau == 1 else e.c
    return _Stage(ParticleSystem(species, y0.ps.min_initial_area), c)


def _post_stage(s: _Stage, y0: _Stage, cfg, grid, mg, info: StepInfo):
    """Clip stray negative weights, pull escaped particles back, collapse
    the merger grid (mirrored onto the carried step-start state), and for
    the elliptic coupling re-solve the chemoattractant."""
    floor = cfg.area_floor
    for sp in s.ps.species:
        if sp.n:
            wmin = float(sp.w.min())
            info.min_weight_pre_clip = min(info.min_weight_pre_clip, wmin)
            if wmin < 0:
                neg = sp.w < 0
                info.clipped_mass += -float(sp.w[neg].sum())
                sp.w[neg] = 0.0
            np.maximum(sp.area, floor, out=sp.area)
    s.ps = pull_back(s.ps, cfg.box)
    # three collapse sweeps: primary grid, half-cell-shifted grid (catches
    # clusters sitting exactly on primary cell lines), then primary again so
    # the advertised invariant holds on the primary grid
    for shifted in (False, True, False):
        s.ps, groups = merger_step2_with_groups(s.ps, mg, shifted=shifted)
        carried = []
        merged_any = False
        for sp0, g in zip(y0.ps.species, groups):
            if g is None:
                carried.append(sp0)
            else:
                inverse, counts = g
                carried.append(SpeciesParticles(*collapse_arrays(sp0.x, sp0.y, sp0.w, sp0.area, inverse, counts)))
                info.merges_step2 += int(sp0.n - len(counts))
                merged_any = True
        if merged_any:
            y0 = _Stage(ParticleSystem(carried, y0.ps.min_initial_area), y0.c)
        if not merged_any and shifted:
            break  # nothing straddles the lines; the primary invariant holds
    if cfg.tau == 0:
        s.c = solve_elliptic(source_density(s.ps, grid), cfg, grid, c0=s.c)
    return s, y0


def ssp_rk3_stage_sequence(
    state: SimState,
    dt: float,
    cfg: SimulationConfig,
    grid: Grid | None = None,
    mg: MergerGrid | None = None,
    first_deriv: StateDerivative | None = None,
    info: StepInfo | None = None,
) -> SimState:
    """Advance the combined particle/grid state by one SSP-RK3 step of
    size dt, with pull-back and grid merger after every stage.

    ``first_deriv`` may pass in an already-evaluated right-hand side for the
    incoming state so the first stage does not recompute it.
    """
    grid = grid or Grid.from_config(cfg)
    mg = mg or MergerGrid.from_config(cfg)
    info = info or StepInfo(dt=dt)
    y0 = _Stage(state.ps, state.c)
    s = y0
    for stage, (a, b) in enumerate(SHU_OSHER):
        if stage == 0 and first_deriv is not None:
            deriv = first_deriv
        else:
            deriv, _, _, _ = _evaluate_rhs(s.ps, s.c, cfg, grid)
        e = _euler(s, dt, deriv, cfg)
        s = e if a == 0.0 else _combine(a, y0, b, e, cfg)
        s, y0 = _post_stage(s, y0, cfg, grid, mg, info)
    return SimState(state.t + dt, s.ps, s.c)


def _max_speed(kin) -> float:
    vmax = 0.0
    for kk in kin:
        if kk.u.size:
            vmax = max(vmax, float(np.max(np.abs(kk.u))), float(np.max(np.abs(kk.v))))
    return vmax


def advance_step(
    state: SimState,
    cfg: SimulationConfig,
    grid: Grid | None = None,
    mg: MergerGrid | None = None,
    next_event: float | None = None,
) -> tuple[SimState, StepInfo]:
    """One full step: bounds, pair merger, SSP-RK3 stage sequence."""
    grid = grid or Grid.from_config(cfg)
    mg = mg or MergerGrid.from_config(cfg)
    deriv, _, kin, diag = _evaluate_rhs(state.ps, state.c, cfg, grid)
    bounds = (
        dt_weight_positivity(state.ps, [d.beta for d in deriv.species]),
        dt_area_decay(state.ps, [k.r for k in kin], cfg.area_floor),
        dt_displacement(state.ps, kin),
        dt_parabolic(cfg, grid),
        dt_exchange_stability(diag),
    )
    target = next_event if next_event is not None else cfg.final_time
    dt = compute_dt(bounds, cfg, state.t, target)
    info = StepInfo(dt=dt, capped_to_event=(dt == target - state.t))
    vmax = _max_speed(kin)
    mu = MU_FACTOR * vmax * vmax
    ps1, merges = merger_step1_counted(state.ps, kin, dt, mu, mg)
    info.merges_step1 = merges
    first_deriv = deriv if merges == 0 else None
    new_state = ssp_rk3_stage_sequence(
        SimState(state.t, ps1, state.c), dt, cfg, grid, mg, first_deriv=first_deriv, info=info
    )
    if info.capped_to_event:
        new_state.t = target
    return new_state, info


def make_snapshot(state: SimState, cfg: SimulationConfig, grid: Grid) -> Snapshot:
    return Snapshot(
        t=state.t,
        box=cfg.box,
        c=state.c.copy(),
        rho=[f.copy() for f in particles_to_grid(state.ps, grid)],
        particles=[sp.copy() for sp in state.ps.species],
    )


def _record(series: TimeSeries, state: SimState, info: StepInfo, cfg, grid):
    rhos = particles_to_grid(state.ps, grid)
    mass = tuple(sp.mass() for sp in state.ps.species)
    series.t.append(state.t)
    series.dt.append(info.dt)
    series.counts.append(state.ps.counts())
    series.mass.append(mass)
    series.max_rho.append(tuple(float(f.max()) for f in rhos))
    series.max_part.append(
        tuple(float(np.max(sp.w / sp.area)) if sp.n else 0.0 for sp in state.ps.species)
    )
    series.max_c.append(float(state.c.max()))
    series.max_weight_fraction.append(
        tuple(float(sp.w.max() / m) if (sp.n and m > 0) else 0.0 for sp, m in zip(state.ps.species, mass))
    )
    series.min_weight.append(
        min((float(sp.w.min()) for sp in state.ps.species if sp.n), default=0.0)
    )
    series.clipped_mass.append(info.clipped_mass)


def initial_state(cfg: SimulationConfig, grid: Grid | None = None) -> SimState:
    grid = grid or Grid.from_config(cfg)
    ps = init_particles(cfg)
    if cfg.tau == 1:
        X, Y = grid.centers_mesh()
        c = np.asarray(cfg.initial_c(X, Y), dtype=float)
        if c.shape != (grid.nx, grid.ny):
            c = np.broadcast_to(c, (grid.nx, grid.ny)).copy()
    else:
        c = solve_elliptic(source_density(ps, grid), cfg, grid)
    return SimState(0.0, ps, c)


def run(cfg: SimulationConfig, step_callback=None) -> RunResult:
    """Integrate to the final time, emitting snapshots at the requested
    times (hit exactly by step capping) and per-step diagnostics.

    On a numerical failure everything computed so far is attached to the
    raised :class:`SimulationError` as ``partial``.
    """
    cfg = validate(cfg)
    grid = Grid.from_config(cfg)
    mg = MergerGrid.from_config(cfg)
    state = initial_state(cfg, grid)
    snapshots: list[Snapshot] = []
    series = TimeSeries()
    snap_set = set(cfg.snapshot_times)
    if any(t == 0.0 for t in snap_set):
        snapshots.append(make_snapshot(state, cfg, grid))
    events = sorted({t for t in snap_set if t > 0.0} | ({cfg.final_time} if cfg.final_time > 0 else set()))
    dt_floor = DT_COLLAPSE_FRACTION * max(cfg.final_time, 1e-300)
    steps = 0
    try:
        while state.t < cfg.final_time:
            next_event = next(e for e in events if e > state.t)
            state, info = advance_step(state, cfg, grid, mg, next_event)
            steps += 1
            _record(series, state, info, cfg, grid)
            if step_callback is not None:
                step_callback(state, info)
            if state.t in snap_set:
                snapshots.append(make_snapshot(state, cfg, grid))
            if steps >= cfg.max_steps and state.t < cfg.final_time:
                raise NumericalError(f"exceeded max_steps={cfg.max_steps} at t={state.t:.6g}")
            if info.dt < dt_floor and not info.capped_to_event:
                raise NumericalError(
                    f"time step collapsed to {info.dt:.3e} at t={state.t:.6g}; "
                    "the run is stalling against a concentration singularity"
                )
    except NumericalError as err:
        partial = RunResult(cfg, grid, snapshots, series, state)
        raise SimulationError(f"run aborted at t={state.t:.6g}: {err}", partial=partial) from err
    return RunResult(cfg, grid, snapshots, series, state)
