"""Core data types shared by every solver component.

The simulator couples three uniform meshes over one rectangular domain:
the finite-difference grid of cell size ``delta``, the initial particle
lattice of size ``delta/4``, and the merger grid of size ``delta/8``.
Those ratios are fixed here and relied on everywhere else.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

PARTICLE_MESH_DIVISOR = 4
MERGER_MESH_DIVISOR = 8

# relative slack when checking that delta divides the domain extents
_DIVISIBILITY_RTOL = 1e-9


class ConfigError(ValueError):
    """Raised by :func:`validate`; carries the full list of violations."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"- {e}" for e in self.errors))


class OutsideDomainError(ValueError):
    """A point that must lie in the closed domain box does not."""


class NumericalError(RuntimeError):
    """A numerical sub-operation failed (non-convergence, degenerate step)."""


@dataclass(frozen=True)
class GaussianBump:
    """``amplitude * exp(-decay * ((x-cx)^2 + (y-cy)^2))``.

    The initial-density shape used by all presets; callable on scalars or
    arrays.
    """

    amplitude: float
    center: tuple[float, float] = (0.0, 0.0)
    decay: float = 100.0

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        return self.amplitude * np.exp(-self.decay * ((x - cx) ** 2 + (y - cy) ** 2))


@dataclass(frozen=True)
class ConstantField:
    """Spatially constant initial condition."""

    value: float

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.full(np.broadcast_shapes(x.shape, y.shape), float(self.value))


@dataclass(frozen=True)
class Box:
    """Closed rectangle [x_lo, x_hi] x [y_lo, y_hi]."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    def contains(self, x, y):
        return (x >= self.x_lo) & (x <= self.x_hi) & (y >= self.y_lo) & (y <= self.y_hi)

    def clamp(self, x, y):
        return np.clip(x, self.x_lo, self.x_hi), np.clip(y, self.y_lo, self.y_hi)


@dataclass(frozen=True)
class SimulationConfig:
    """All physical and numerical parameters of one run.

    Per-species parameters (``chi``, ``nu_rho``, ``gamma``,
    ``initial_density``) are tuples of length ``n_species``.  ``tau`` selects
    the chemoattractant coupling: 1 evolves c in time, 0 solves the elliptic
    balance after every stage.  ``initial_c`` is required only for ``tau=1``.
    """

    tau: int
    chi: tuple[float, ...]
    nu_rho: tuple[float, ...]
    nu_c: float
    gamma: tuple[float, ...]
    zeta: float
    n_species: int
    box: Box
    delta: float
    final_time: float
    initial_density: tuple[Callable, ...]
    initial_c: Callable | None = None
    snapshot_times: tuple[float, ...] = ()
    safety_factor: float = 0.9
    use_kernel_cutoff: bool = True
    max_steps: int = 2_000_000

    @property
    def particle_mesh_size(self) -> float:
        return self.delta / PARTICLE_MESH_DIVISOR

    @property
    def merger_mesh_size(self) -> float:
        return self.delta / MERGER_MESH_DIVISOR

    @property
    def area_floor(self) -> float:
        """Smallest representable subdomain area, ``(delta/16)^2``.

        The square of the density-recovery desingularization length: point
        densities w/area are capped at the same scale the in-cell distance
        weighting resolves.  Concentration drives subdomain areas to zero in
        finite time; the floor keeps the post-concentration state integrable
        (a particle at the floor is a resolved point mass).
        """
        return (self.delta / 16.0) ** 2

    def grid_shape(self) -> tuple[int, int]:
        """(nx, ny) cell counts of the FD grid; requires a valid config."""
        nx = int(round(self.box.width / self.delta))
        ny = int(round(self.box.height / self.delta))
        return nx, ny


def _divides(delta: float, extent: float) -> bool:
    n = round(extent / delta)
    return n >= 1 and math.isclose(n * delta, extent, rel_tol=_DIVISIBILITY_RTOL)


def config_errors(cfg: SimulationConfig) -> list[str]:
    """Collect every violated constraint; empty list means valid."""
    errs: list[str] = []
    if cfg.tau not in (0, 1):
        errs.append(f"tau must be 0 or 1, got {cfg.tau}")
    if cfg.n_species not in (1, 2):
        errs.append(f"n_species must be 1 or 2, got {cfg.n_species}")
    for name, values in (("chi", cfg.chi), ("nu_rho", cfg.nu_rho), ("gamma", cfg.gamma)):
        if len(values) != cfg.n_species:
            errs.append(f"{name} must have one entry per species")
        for k, v in enumerate(values):
            if not v > 0:
                errs.append(f"{name}[{k}] must be positive, got {v}")
    if not cfg.nu_c > 0:
        errs.append(f"nu_c must be positive, got {cfg.nu_c}")
    if not cfg.zeta > 0:
        errs.append(f"zeta must be positive, got {cfg.zeta}")
    if len(cfg.initial_density) != cfg.n_species:
        errs.append("initial_density must have one entry per species")
    if cfg.tau == 1 and cfg.initial_c is None:
        errs.append("initial_c is required when tau=1")
    if not (cfg.box.width > 0 and cfg.box.height > 0):
        errs.append(f"domain box must be non-empty, got {cfg.box}")
    if not cfg.delta > 0:
        errs.append(f"delta must be positive, got {cfg.delta}")
    elif cfg.box.width > 0 and cfg.box.height > 0:
        if not _divides(cfg.delta, cfg.box.width):
            errs.append(f"delta={cfg.delta} does not divide the domain width {cfg.box.width}")
        if not _divides(cfg.delta, cfg.box.height):
            errs.append(f"delta={cfg.delta} does not divide the domain height {cfg.box.height}")
    if not cfg.final_time >= 0:
        errs.append(f"final_time must be nonnegative, got {cfg.final_time}")
    if not 0 < cfg.safety_factor <= 1:
        errs.append(f"safety_factor must be in (0, 1], got {cfg.safety_factor}")
    if any(t < 0 or t > cfg.final_time for t in cfg.snapshot_times):
        errs.append("snapshot_times must lie in [0, final_time]")
    if list(cfg.snapshot_times) != sorted(cfg.snapshot_times):
        errs.append("snapshot_times must be sorted ascending")
    if cfg.max_steps < 1:
        errs.append(f"max_steps must be at least 1, got {cfg.max_steps}")
    return errs


def validate(cfg: SimulationConfig) -> SimulationConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise ConfigError.

    A two-species run with chi[1] <= chi[0] only warns: the solver does not
    need the ordering, it is just the regime the model targets.
    """
    errs = config_errors(cfg)
    if errs:
        raise ConfigError(errs)
    if cfg.n_species == 2 and not cfg.chi[1] > cfg.chi[0]:
        warnings.warn(
            f"expected chi2 > chi1 > 0, got chi={cfg.chi}; proceeding anyway",
            stacklevel=2,
        )
    return cfg


@dataclass
class Grid:
    """Uniform cell-centered rectangular mesh with named scalar fields.

    Field arrays are indexed ``[ix, iy]`` with shape ``(nx, ny)``; cell
    centers sit at ``x_lo + (ix + 1/2) * dx``, so boundary cells lie half a
    cell inside the domain edge.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    box: Box
    fields: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_box(cls, box: Box, nx: int, ny: int) -> Grid:
        return cls(nx=nx, ny=ny, dx=box.width / nx, dy=box.height / ny, box=box)

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> Grid:
        nx, ny = cfg.grid_shape()
        return cls.from_box(cfg.box, nx, ny)

    @property
    def x_centers(self) -> np.ndarray:
        return self.box.x_lo + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self) -> np.ndarray:
        return self.box.y_lo + (np.arange(self.ny) + 0.5) * self.dy

    def centers_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers, self.y_centers, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros((self.nx, self.ny))

    def locate(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized cell lookup for points already inside the closed box.

        The floor of the scaled coordinate can land one cell off when the
        point sits within rounding distance of an edge, so the index is
        corrected against the actual edge coordinates: every point ends up
        in a cell whose closed extent contains it, and points exactly on an
        interior edge go to the higher-index cell.
        """
        x = np.asarray(x)
        y = np.asarray(y)
        ix = np.floor((x - self.box.x_lo) / self.dx).astype(np.int64)
        iy = np.floor((y - self.box.y_lo) / self.dy).astype(np.int64)
        ix -= x < self.box.x_lo + ix * self.dx
        ix += x >= self.box.x_lo + (ix + 1) * self.dx
        iy -= y < self.box.y_lo + iy * self.dy
        iy += y >= self.box.y_lo + (iy + 1) * self.dy
        return np.clip(ix, 0, self.nx - 1), np.clip(iy, 0, self.ny - 1)


def locate_cell(p: tuple[float, float], g: Grid) -> tuple[int, int]:
    """Cell (ix, iy) containing point ``p`` (0-based indices).

    Points on an interior cell boundary belong to the higher-index cell;
    points on the outer boundary clamp to the nearest valid cell.  A point
    strictly outside the closed box is an error: callers are expected to
    have pulled escaped particles back first.
    """
    x, y = float(p[0]), float(p[1])
    if not (g.box.x_lo <= x <= g.box.x_hi and g.box.y_lo <= y <= g.box.y_hi):
        raise OutsideDomainError(f"point {p} lies outside the domain box {g.box}")
    ix, iy = g.locate(x, y)
    return int(ix), int(iy)


@dataclass(frozen=True)
class Particle:
    """One particle: position, weight (mass), subdomain area, species index."""

    x: float
    y: float
    w: float
    area: float
    species: int = 0


@dataclass
class SpeciesParticles:
    """Per-species particle arrays; always index-aligned with each other."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    area: np.ndarray

    def __post_init__(self):
        n = len(self.x)
        if not (len(self.y) == len(self.w) == len(self.area) == n):
            raise ValueError("particle arrays must have equal length")

    @property
    def n(self) -> int:
        return len(self.x)

    def mass(self) -> float:
        return float(np.sum(self.w))

    def particle(self, i: int, species: int = 0) -> Particle:
        return Particle(float(self.x[i]), float(self.y[i]), float(self.w[i]), float(self.area[i]), species)

    def copy(self) -> SpeciesParticles:
        return SpeciesParticles(self.x.copy(), self.y.copy(), self.w.copy(), self.area.copy())

    @classmethod
    def empty(cls) -> SpeciesParticles:
        z = np.zeros(0)
        return cls(z.copy(), z.copy(), z.copy(), z.copy())


@dataclass
class ParticleSystem:
    """All species' particles plus the initial minimum subdomain area.

    ``min_initial_area`` is recorded at initialization and stays fixed for
    the whole run; the displacement time-step bound and the neighbor-search
    cell size both derive from it.
    """

    species: list[SpeciesParticles]
    min_initial_area: float

    @property
    def n_species(self) -> int:
        return len(self.species)

    def counts(self) -> tuple[int, ...]:
        return tuple(sp.n for sp in self.species)

    def total_mass(self, k: int) -> float:
        return self.species[k].mass()

    def copy(self) -> ParticleSystem:
        return ParticleSystem([sp.copy() for sp in self.species], self.min_initial_area)


@dataclass
class SpeciesKinematics:
    """Sampled velocity (u, v) and velocity divergence r for one species."""

    u: np.ndarray
    v: np.ndarray
    r: np.ndarray


@dataclass
class SpeciesDerivative:
    """Time derivatives of one species' particle arrays."""

    u: np.ndarray      # d(x)/dt
    v: np.ndarray      # d(y)/dt
    beta: np.ndarray   # d(w)/dt
    darea: np.ndarray  # d(area)/dt = r * area


@dataclass
class StateDerivative:
    """Derivatives of all particle quantities, plus dc/dt when tau=1."""

    species: list[SpeciesDerivative]
    dc: np.ndarray | None = None


def replace_config(cfg: SimulationConfig, **kwargs) -> SimulationConfig:
    """dataclasses.replace with validation applied to the result."""
    return validate(replace(cfg, **kwargs))
