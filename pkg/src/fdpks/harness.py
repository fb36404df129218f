"""Run harness: the five built-in presets, config file parsing and
emission, snapshot/series output, and the mesh-refinement convergence
driver.

Config files are flat key-value text with section headers (INI style).
Initial conditions are named built-ins (``gaussian`` bumps and ``constant``
fields), which cover every preset and keep configs round-trippable.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .domain import (
    Box,
    ConfigError,
    ConstantField,
    GaussianBump,
    Grid,
    SimulationConfig,
    validate,
)
from .integrator import RunResult, Snapshot, TimeSeries, run
from .projection import LinearInterpolant

SERIES_HEADER = "# t dt n1 n2 mass1 mass2 maxrho1 maxrho2 maxpart1 maxpart2 maxc"
PARTICLE_HEADER = "# species x y w area t"


def _fmt(v) -> str:
    """Shortest round-trip decimal of a float value."""
    return repr(float(v))


def _example12_config() -> SimulationConfig:
    bump = GaussianBump(500.0)
    return SimulationConfig(
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
        initial_density=(bump, bump),
        initial_c=ConstantField(1.0),
        snapshot_times=(2e-4,),
    )


def _example34_config(amplitude: float) -> SimulationConfig:
    return SimulationConfig(
        tau=1,
        chi=(1.0,),
        nu_rho=(1.0,),
        nu_c=1.0,
        gamma=(1.0,),
        zeta=1.0,
        n_species=1,
        box=Box(-0.5, 0.5, -0.5, 0.5),
        delta=1.0 / 20.0,
        final_time=0.2 if amplitude == 500.0 else 0.1,
        initial_density=(GaussianBump(amplitude, center=(0.25, 0.25)),),
        initial_c=ConstantField(0.0),
        snapshot_times=(0.02, 0.05, 0.1, 0.2) if amplitude == 500.0 else (0.02, 0.05, 0.1),
    )


def _example5_config() -> SimulationConfig:
    bump = GaussianBump(50.0)
    return SimulationConfig(
        tau=0,
        chi=(1.0, 20.0),
        nu_rho=(1.0, 1.0),
        nu_c=1.0,
        gamma=(1.0, 1.0),
        zeta=1.0,
        n_species=2,
        box=Box(-1.0, 1.0, -1.0, 1.0),
        delta=1.0 / 20.0,
        final_time=0.0033,
        initial_density=(bump, bump),
        snapshot_times=(0.003, 0.0033),
    )


PRESETS = {
    "example1": (_example12_config, "two-species accuracy test (parabolic, t=2e-4)"),
    "example2": (
        lambda: replace(_example12_config(), final_time=1e-3, delta=1.0 / 20.0, snapshot_times=(5e-4, 1e-3)),
        "two-species blowup at the domain center (parabolic)",
    ),
    "example3": (lambda: _example34_config(500.0), "single-species blowup at a corner"),
    "example4": (lambda: _example34_config(1000.0), "single-species blowup in the interior"),
    "example5": (_example5_config, "two-species simultaneous blowup (parabolic-elliptic)"),
}


def preset_config(name: str) -> SimulationConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset '{name}' (have: {', '.join(sorted(PRESETS))})"])
    return validate(PRESETS[name][0]())


# ---------------------------------------------------------------------------
# config file parsing / emission


def _parse_float(section, key, raw):
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigError([f"{section}.{key}: cannot parse '{raw}' as a number"]) from e


def _parse_density(parser, section: str):
    if section not in parser:
        raise ConfigError([f"missing section [{section}]"])
    sec = dict(parser[section])
    kind = sec.pop("kind", None)
    if kind == "gaussian":
        required = {"amplitude", "center_x", "center_y", "decay"}
        unknown = set(sec) - required
        if unknown:
            raise ConfigError([f"{section}: unknown key '{k}'" for k in sorted(unknown)])
        missing = required - set(sec)
        if missing:
            raise ConfigError([f"{section}: missing key '{k}'" for k in sorted(missing)])
        vals = {k: _parse_float(section, k, sec[k]) for k in required}
        return GaussianBump(vals["amplitude"], (vals["center_x"], vals["center_y"]), vals["decay"])
    if kind == "constant":
        unknown = set(sec) - {"value"}
        if unknown:
            raise ConfigError([f"{section}: unknown key '{k}'" for k in sorted(unknown)])
        if "value" not in sec:
            raise ConfigError([f"{section}: missing key 'value'"])
        return ConstantField(_parse_float(section, "value", sec["value"]))
    raise ConfigError([f"{section}.kind: expected 'gaussian' or 'constant', got {kind!r}"])


_SIM_KEYS = {
    "tau", "n_species", "nu_c", "zeta",
    "x_lo", "x_hi", "y_lo", "y_hi",
    "delta", "t_end", "snapshots", "safety", "cutoff", "max_steps",
}


def parse_config_text(text: str) -> SimulationConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"config syntax: {e}"]) from e
    if "simulation" not in parser:
        raise ConfigError(["missing section [simulation]"])
    sim = dict(parser["simulation"])

    def take(key, default=None):
        if key in sim:
            return sim.pop(key)
        if default is not None:
            return default
        raise ConfigError([f"simulation: missing key '{key}'"])

    n_species = int(_parse_float("simulation", "n_species", take("n_species")))
    if n_species not in (1, 2):
        raise ConfigError([f"simulation.n_species: must be 1 or 2, got {n_species}"])
    tau = int(_parse_float("simulation", "tau", take("tau")))

    per_species = {}
    for base in ("chi", "nu", "gamma"):
        vals = []
        for k in range(1, n_species + 1):
            key = f"{base}{k}"
            if key not in sim:
                raise ConfigError([f"simulation: missing key '{key}'"])
            vals.append(_parse_float("simulation", key, sim.pop(key)))
        per_species[base] = tuple(vals)

    allowed = _SIM_KEYS
    unknown = set(sim) - allowed
    if unknown:
        raise ConfigError([f"simulation: unknown key '{k}'" for k in sorted(unknown)])

    snapshots_raw = take("snapshots", "")
    snapshot_times = tuple(
        _parse_float("simulation", "snapshots", tok) for tok in snapshots_raw.replace(",", " ").split()
    )
    cutoff_raw = take("cutoff", "on").strip().lower()
    if cutoff_raw not in ("on", "off"):
        raise ConfigError([f"simulation.cutoff: expected 'on' or 'off', got '{cutoff_raw}'"])

    densities = tuple(_parse_density(parser, f"density{k}") for k in range(1, n_species + 1))
    initial_c = _parse_density(parser, "chemoattractant") if tau == 1 else None
    if tau == 0 and "chemoattractant" in parser:
        raise ConfigError(["section [chemoattractant] is only valid for tau = 1"])
    expected_sections = {"simulation"} | {f"density{k}" for k in range(1, n_species + 1)}
    if tau == 1:
        expected_sections.add("chemoattractant")
    unknown_sections = set(parser.sections()) - expected_sections
    if unknown_sections:
        raise ConfigError([f"unknown section [{s}]" for s in sorted(unknown_sections)])

    cfg = SimulationConfig(
        tau=tau,
        chi=per_species["chi"],
        nu_rho=per_species["nu"],
        nu_c=_parse_float("simulation", "nu_c", take("nu_c")),
        gamma=per_species["gamma"],
        zeta=_parse_float("simulation", "zeta", take("zeta")),
        n_species=n_species,
        box=Box(
            _parse_float("simulation", "x_lo", take("x_lo")),
            _parse_float("simulation", "x_hi", take("x_hi")),
            _parse_float("simulation", "y_lo", take("y_lo")),
            _parse_float("simulation", "y_hi", take("y_hi")),
        ),
        delta=_parse_float("simulation", "delta", take("delta")),
        final_time=_parse_float("simulation", "t_end", take("t_end")),
        initial_density=densities,
        initial_c=initial_c,
        snapshot_times=snapshot_times,
        safety_factor=_parse_float("simulation", "safety", take("safety", "0.9")),
        use_kernel_cutoff=(cutoff_raw == "on"),
        max_steps=int(_parse_float("simulation", "max_steps", take("max_steps", "2000000"))),
    )
    return validate(cfg)


def parse_config(source: str | Path) -> SimulationConfig:
    """Config from a preset name or a config file path."""
    if isinstance(source, str) and source in PRESETS:
        return preset_config(source)
    path = Path(source)
    if not path.exists():
        raise ConfigError([f"'{source}' is neither a preset name nor an existing config file"])
    return parse_config_text(path.read_text())


def _format_ic(name: str, ic) -> str:
    if isinstance(ic, GaussianBump):
        return (
            f"[{name}]\nkind = gaussian\namplitude = {ic.amplitude!r}\n"
            f"center_x = {ic.center[0]!r}\ncenter_y = {ic.center[1]!r}\ndecay = {ic.decay!r}\n"
        )
    if isinstance(ic, ConstantField):
        return f"[{name}]\nkind = constant\nvalue = {ic.value!r}\n"
    raise ConfigError([f"{name}: only gaussian/constant initial conditions can be written to a file"])


def format_config(cfg: SimulationConfig) -> str:
    lines = ["[simulation]"]
    lines.append(f"tau = {cfg.tau}")
    lines.append(f"n_species = {cfg.n_species}")
    for k in range(cfg.n_species):
        lines.append(f"chi{k + 1} = {cfg.chi[k]!r}")
    for k in range(cfg.n_species):
        lines.append(f"nu{k + 1} = {cfg.nu_rho[k]!r}")
    lines.append(f"nu_c = {cfg.nu_c!r}")
    for k in range(cfg.n_species):
        lines.append(f"gamma{k + 1} = {cfg.gamma[k]!r}")
    lines.append(f"zeta = {cfg.zeta!r}")
    lines.append(f"x_lo = {cfg.box.x_lo!r}")
    lines.append(f"x_hi = {cfg.box.x_hi!r}")
    lines.append(f"y_lo = {cfg.box.y_lo!r}")
    lines.append(f"y_hi = {cfg.box.y_hi!r}")
    lines.append(f"delta = {cfg.delta!r}")
    lines.append(f"t_end = {cfg.final_time!r}")
    lines.append("snapshots = " + ", ".join(repr(t) for t in cfg.snapshot_times))
    lines.append(f"safety = {cfg.safety_factor!r}")
    lines.append("cutoff = " + ("on" if cfg.use_kernel_cutoff else "off"))
    lines.append(f"max_steps = {cfg.max_steps}")
    blocks = ["\n".join(lines) + "\n"]
    for k in range(cfg.n_species):
        blocks.append(_format_ic(f"density{k + 1}", cfg.initial_density[k]))
    if cfg.tau == 1:
        blocks.append(_format_ic("chemoattractant", cfg.initial_c))
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# emission


def _write_field(path: Path, field: np.ndarray, box: Box, t: float, name: str):
    nx, ny = field.shape
    dx = box.width / nx
    dy = box.height / ny
    with path.open("w") as fh:
        header = " ".join([str(nx), str(ny), _fmt(box.x_lo), _fmt(box.x_hi), _fmt(box.y_lo), _fmt(box.y_hi), _fmt(t), name])
        fh.write(f"# {header}\n")
        for ix in range(nx):
            x = box.x_lo + (ix + 0.5) * dx
            for iy in range(ny):
                y = box.y_lo + (iy + 0.5) * dy
                fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(field[ix, iy])}\n")


def _write_particles(path: Path, snap: Snapshot):
    with path.open("w") as fh:
        fh.write(PARTICLE_HEADER + "\n")
        for k, sp in enumerate(snap.particles):
            for i in range(sp.n):
                fh.write(
                    f"{k + 1} {_fmt(sp.x[i])} {_fmt(sp.y[i])} {_fmt(sp.w[i])} {_fmt(sp.area[i])} {_fmt(snap.t)}\n"
                )


def _series_row(series: TimeSeries, i: int) -> str:
    def two(tup):
        a = tup[0] if len(tup) > 0 else 0.0
        b = tup[1] if len(tup) > 1 else 0.0
        return a, b

    n1, n2 = two(series.counts[i])
    m1, m2 = two(series.mass[i])
    r1, r2 = two(series.max_rho[i])
    p1, p2 = two(series.max_part[i])
    vals = [series.t[i], series.dt[i], n1, n2, m1, m2, r1, r2, p1, p2, series.max_c[i]]
    return " ".join(str(int(v)) if isinstance(v, (int, np.integer)) else _fmt(v) for v in vals)


def emit(
    snapshots: list[Snapshot],
    series: TimeSeries,
    out_dir: str | Path,
    cfg: SimulationConfig | None = None,
) -> list[Path]:
    """Write snapshot fields, particle tables, the time series, the config,
    and a manifest into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[tuple[Path, str]] = []
    field_names = ["c", "rho1", "rho2"]
    for idx, snap in enumerate(snapshots):
        fields = [snap.c] + list(snap.rho)
        for name, field in zip(field_names, fields):
            path = out / f"snap{idx:03d}_{name}.dat"
            _write_field(path, field, snap.box, snap.t, name)
            written.append((path, repr(snap.t)))
        path = out / f"snap{idx:03d}_particles.dat"
        _write_particles(path, snap)
        written.append((path, repr(snap.t)))
    series_path = out / "series.dat"
    with series_path.open("w") as fh:
        fh.write(SERIES_HEADER + "\n")
        for i in range(len(series)):
            fh.write(_series_row(series, i) + "\n")
    written.append((series_path, "-"))
    if cfg is not None:
        cfg_path = out / "config.cfg"
        cfg_path.write_text(format_config(cfg))
        written.append((cfg_path, "-"))
    manifest = out / "manifest.txt"
    with manifest.open("w") as fh:
        for path, t in written:
            fh.write(f"{path.name}\t{t}\n")
    return [p for p, _ in written] + [manifest]


def emit_result(result: RunResult, out_dir: str | Path) -> list[Path]:
    return emit(result.snapshots, result.series, out_dir, cfg=result.cfg)


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceRow:
    """Runge error estimates and rates for one (d, d/2, d/4) mesh triple,
    labeled by the finest mesh."""

    delta_fine: float
    l1_error: dict[str, float]
    l1_rate: dict[str, float]
    l2_error: dict[str, float]
    l2_rate: dict[str, float]


def runge_error_and_rate(n1: float, n2: float) -> tuple[float, float]:
    """Error estimate and order from two successive difference norms."""
    return n2 * n2 / abs(n1 - n2), math.log2(n1 / n2)


def _terminal_fields(cfg: SimulationConfig) -> tuple[Grid, dict[str, np.ndarray]]:
    from .projection import particles_to_grid

    res = run(replace(cfg, snapshot_times=()))
    rhos = particles_to_grid(res.state.ps, res.grid)
    fields = {f"rho{k + 1}": rhos[k] for k in range(cfg.n_species)}
    fields["c"] = res.state.c
    return res.grid, fields


def convergence_study(
    source: str | SimulationConfig,
    deltas,
    t_end: float = 2e-4,
) -> list[ConvergenceRow]:
    """Runge convergence table over a refinement-chained mesh list.

    ``deltas`` must be descending with consecutive ratio 2; every (d, d/2,
    d/4) triple yields one row.  Differences between meshes are evaluated at
    the coarsest grid's cell centers through the piecewise-linear
    interpolants of the finer solutions, in cell-area-weighted discrete L1
    and L2 norms.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ConfigError(["convergence study needs at least three mesh sizes"])
    for a, b in zip(deltas, deltas[1:]):
        if not math.isclose(a / b, 2.0, rel_tol=1e-9):
            raise ConfigError([f"mesh sizes must halve between entries, got {a} then {b}"])
    base = parse_config(source) if isinstance(source, (str, Path)) else source
    results = {}
    for d in deltas:
        cfg_d = validate(replace(base, delta=d, final_time=t_end, snapshot_times=()))
        results[d] = _terminal_fields(cfg_d)
    rows = []
    for i in range(len(deltas) - 2):
        d = deltas[i]
        grid_c, fields_c = results[d]
        Xc, Yc = grid_c.centers_mesh()
        xs, ys = Xc.ravel(), Yc.ravel()
        cell_area = grid_c.dx * grid_c.dy
        l1e, l1r, l2e, l2r = {}, {}, {}, {}
        for name, coarse_vals in fields_c.items():
            grid_m, fields_m = results[deltas[i + 1]]
            grid_f, fields_f = results[deltas[i + 2]]
            mid = LinearInterpolant.of(fields_m[name], grid_m).at_many(xs, ys)
            fine = LinearInterpolant.of(fields_f[name], grid_f).at_many(xs, ys)
            diff1 = coarse_vals.ravel() - mid
            diff2 = mid - fine
            for p, (edict, rdict) in ((1, (l1e, l1r)), (2, (l2e, l2r))):
                if p == 1:
                    n1 = float(np.sum(np.abs(diff1)) * cell_area)
                    n2 = float(np.sum(np.abs(diff2)) * cell_area)
                else:
                    n1 = float(np.sqrt(np.sum(diff1**2) * cell_area))
                    n2 = float(np.sqrt(np.sum(diff2**2) * cell_area))
                err, rate = runge_error_and_rate(n1, n2)
                edict[name] = err
                rdict[name] = rate
        rows.append(ConvergenceRow(deltas[i + 2], l1e, l1r, l2e, l2r))
    return rows


def format_convergence_table(rows: list[ConvergenceRow]) -> str:
    names = sorted(rows[0].l1_error)
    header = ["delta"]
    for n in names:
        header += [f"{n}_L1err", f"{n}_L1rate", f"{n}_L2err", f"{n}_L2rate"]
    lines = ["  ".join(header)]
    for row in rows:
        cells = [f"{row.delta_fine:.6g}"]
        for n in names:
            cells += [
                f"{row.l1_error[n]:.3e}",
                f"{row.l1_rate[n]:.2f}",
                f"{row.l2_error[n]:.3e}",
                f"{row.l2_rate[n]:.2f}",
            ]
        lines.append("  ".join(cells))
    return "\n".join(lines)
