"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The blowup runs are expensive (minutes to tens of minutes each) and shared
between criteria through module-scoped fixtures.  Criteria are asserted at
their stated tolerances; see /root/notes for analysis of any that fail.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import basic_config
from fdpks.chemo_fd import chemo_rhs, solve_elliptic
from fdpks.domain import Box, Grid, ParticleSystem, SpeciesParticles
from fdpks.harness import convergence_study, preset_config
from fdpks.integrator import run, ssp_rk3_step
from fdpks.merger import MergerGrid, merger_step1, merger_step2
from fdpks.particles import diffusion_weight_rhs, init_particles
from fdpks.projection import STEP3_DIAG, STEP3_EDGE, particles_to_grid
from oracles import heat_kernel_gaussian, merger_step1_reference


def report(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def run_preset(name, **overrides):
    cfg = replace(preset_config(name), snapshot_times=(), **overrides)
    return run(cfg)


def run_preset_tolerant(name, **overrides):
    """Run a preset; on a post-blowup abort return the partial results.

    Integrating past a completed point concentration drives the admissible
    step to zero (subdomain areas decay at a rate proportional to the
    unbounded recovered density), which run() reports as a collapse error
    carrying everything computed so far.
    """
    from fdpks.integrator import SimulationError

    cfg = replace(preset_config(name), snapshot_times=(), **overrides)
    try:
        return run(cfg), True
    except SimulationError as err:
        return err.partial, False


# ---------------------------------------------------------------------------
# shared expensive runs


@pytest.fixture(scope="module")
def ex2_run():
    return run_preset("example2")


@pytest.fixture(scope="module")
def ex3_run():
    return run_preset_tolerant("example3")


@pytest.fixture(scope="module")
def ex4_run():
    return run_preset_tolerant("example4")


@pytest.fixture(scope="module")
def ex5_runs():
    return {d: run_preset("example5", delta=d) for d in (1 / 15, 1 / 20, 1 / 30)}


# ---------------------------------------------------------------------------
# criteria


class TestConvergence:
    def test_example1_runge_rates(self):
        rows = convergence_study("example1", [2 / 15, 2 / 30, 2 / 60], t_end=2e-4)
        row = rows[0]
        rates = {}
        for name in ("rho1", "rho2", "c"):
            rates[f"{name}.L1"] = row.l1_rate[name]
            rates[f"{name}.L2"] = row.l2_rate[name]
        detail = "  ".join(f"{k}={v:.2f}" for k, v in rates.items())
        report("convergence rates >= 1.5 (example1, 2/15-2/30-2/60)", all(v >= 1.5 for v in rates.values()), detail)

    def test_example1_c_rates_near_paper_row(self):
        rows = convergence_study("example1", [2 / 15, 2 / 30, 2 / 60], t_end=2e-4)
        l1, l2 = rows[0].l1_rate["c"], rows[0].l2_rate["c"]
        ok = abs(l1 - 1.78) <= 0.4 and abs(l2 - 2.00) <= 0.4
        report("c rates within 0.4 of (1.78, 2.00)", ok, f"got ({l1:.2f}, {l2:.2f})")


class TestTwoSpeciesParabolicBlowup:
    def test_example2_maxima(self, ex2_run):
        r1, r2 = ex2_run.series.max_rho[-1]
        ok = r2 >= 1e5 and r1 >= 1e3
        report("example2 blowup maxima (rho2>=1e5, rho1>=1e3)", ok, f"max rho1={r1:.4g}, max rho2={r2:.4g}")

    def test_example2_smoke_ratio(self):
        res = run_preset("example2", delta=1 / 10)
        r1, r2 = res.series.max_rho[-1]
        report("example2 smoke ratio rho2/rho1 >= 10 (delta=1/10)", r2 / r1 >= 10.0, f"ratio={r2 / r1:.2f}")


class TestCornerBlowup:
    def test_example3_corner_concentration(self, ex3_run):
        res, completed = ex3_run
        sp = res.state.ps.species[0]
        tot = sp.w.sum()
        cx = float(np.sum(sp.w * sp.x) / tot)
        cy = float(np.sum(sp.w * sp.y) / tot)
        dist = math.hypot(cx - 0.5, cy - 0.5)
        frac = float(sp.w.max() / tot)
        ok = completed and dist <= 0.1 and frac >= 0.5
        report(
            "example3 corner blowup (centroid within 0.1 of corner, heaviest >= 50% at t=0.2)",
            ok,
            f"reached t={res.state.t:.4g} centroid=({cx:.3f},{cy:.3f}) dist={dist:.3f} heaviest frac={frac:.3f}",
        )


class TestInteriorBlowup:
    def test_example4_dominating_particle_interior(self, ex4_run):
        res, completed = ex4_run
        sp = res.state.ps.species[0]
        i = int(np.argmax(sp.w))
        x, y = float(sp.x[i]), float(sp.y[i])
        box = res.cfg.box
        dist = min(x - box.x_lo, box.x_hi - x, y - box.y_lo, box.y_hi - y)
        report(
            "example4 dominating particle strictly interior (>= 0.05 from boundary) at t=0.1",
            completed and dist >= 0.05,
            f"reached t={res.state.t:.4g}, heaviest at ({x:.3f},{y:.3f}), "
            f"boundary distance {dist:.3f}, frac={sp.w[i] / sp.w.sum():.3f}",
        )


class TestSimultaneousBlowup:
    def test_example5_maxima(self, ex5_runs):
        res = ex5_runs[1 / 20]
        r1, r2 = res.series.max_rho[-1]
        ok = r1 >= 1e4 and r2 >= 1e5
        report("example5 maxima at t=0.0033 (rho1>=1e4, rho2>=1e5)", ok, f"max rho1={r1:.4g}, max rho2={r2:.4g}")

    def test_example5_concentration_time(self, ex5_runs):
        res = ex5_runs[1 / 20]
        conc = [t for t, m in zip(res.series.t, res.series.max_weight_fraction) if m[1] >= 0.99]
        t99 = conc[0] if conc else math.inf
        report(
            "example5 species-2 mass >=99% in one particle by t<=0.0031",
            t99 <= 0.0031,
            f"first such time: {t99 if conc else 'never (max frac %.3f)' % max(m[1] for m in res.series.max_weight_fraction)}",
        )


class TestResolutionTrend:
    def test_terminal_max_rho1_grows_with_resolution(self, ex5_runs):
        coarse = ex5_runs[1 / 15].series.max_rho[-1][0]
        fine = ex5_runs[1 / 30].series.max_rho[-1][0]
        report(
            "resolution trend: terminal max rho1(1/30) >= 3x that of 1/15",
            fine >= 3.0 * coarse,
            f"1/15 -> {coarse:.4g}, 1/30 -> {fine:.4g} (factor {fine / coarse:.2f})",
        )


class TestPropertySuite:
    def test_mass_conservation_full_run_without_cutoff(self):
        cfg = basic_config(delta=2 / 15, final_time=2e-4, use_kernel_cutoff=False)
        from fdpks.particles import init_particles as init

        m0 = [sp.mass() for sp in init(cfg).species]
        res = run(cfg)
        rel = max(abs(res.state.ps.species[k].mass() - m0[k]) / m0[k] for k in range(2))
        report("mass conservation <= 1e-8 over a full run (cutoff disabled)", rel <= 1e-8, f"relative drift {rel:.2e}")
        assert sum(res.series.clipped_mass) <= 1e-10 * sum(m0)

    def test_weight_nonnegativity_every_step(self, ex2_run):
        worst = min(ex2_run.series.min_weight)
        report("weight nonnegativity at every step", worst >= 0.0, f"min weight over run {worst:.3e}")

    def test_post_merger_grid_invariant(self, rng):
        n = 500
        sp = SpeciesParticles(
            rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), rng.uniform(0, 1, n), rng.uniform(1e-4, 1e-3, n)
        )
        mg = MergerGrid(Box(-1, 1, -1, 1), 0.05, 0.1)
        out = merger_step2(ParticleSystem([sp], 1e-4), mg)
        hs = mg.merge_hash(out.species[0])
        flat = hs.cellx * hs.ncy + hs.celly
        _, counts = np.unique(flat, return_counts=True)
        report("post-merger grid invariant (no cell with >= 2)", int(counts.max()) == 1, f"max occupancy {counts.max()}")

    def test_hashed_merger_equals_bruteforce(self):
        rng = np.random.default_rng(7)
        n = 200
        x = rng.uniform(-0.3, 0.3, n)
        y = rng.uniform(-0.3, 0.3, n)
        w = rng.uniform(0.0, 1.0, n)
        area = rng.uniform(0.5, 2.0, n) * 1e-2
        u = rng.uniform(-1, 1, n)
        v = rng.uniform(-1, 1, n)
        cell = float(np.sqrt(area.min()))
        mg = MergerGrid(Box(-1, 1, -1, 1), cell / 2, cell)
        vmax = max(np.abs(u).max(), np.abs(v).max())
        dt = 0.9 * cell / vmax
        mu = 1e-12 * vmax**2
        from fdpks.domain import SpeciesKinematics

        got = merger_step1(
            ParticleSystem([SpeciesParticles(x.copy(), y.copy(), w.copy(), area.copy())], area.min()),
            [SpeciesKinematics(u, v, np.zeros(n))], dt, mu, mg,
        ).species[0]
        rx, ry, rw, ra = merger_step1_reference(x, y, w, area, u, v, dt, mu)
        same = (
            np.array_equal(got.x, rx) and np.array_equal(got.y, ry)
            and np.array_equal(got.w, rw) and np.array_equal(got.area, ra)
        )
        report("hashed merger step 1 == brute force (200 particles)", same and got.n < n, f"{n - got.n} merges, identical={same}")

    def test_step3_coefficient_identity(self):
        val = 4.0 * STEP3_EDGE + 4.0 * STEP3_DIAG
        report("step-3 fill coefficients sum to one", abs(val - 1.0) <= 1e-15, f"sum = {val!r}")

    def test_elliptic_manufactured_order(self):
        def err(n):
            cfg = basic_config(tau=0, initial_c=None, nu_c=1.0, zeta=1.0, gamma=(2.0, 1.0))
            grid = Grid.from_box(Box(-1, 1, -1, 1), n, n)
            X, Y = grid.centers_mesh()
            exact = np.cos(math.pi * X) * np.cos(math.pi * Y)
            rho1 = (2.0 * math.pi**2 + 1.0) * exact / 2.0
            return np.abs(solve_elliptic([rho1, grid.zeros()], cfg, grid) - exact).max()

        rate = math.log2(err(20) / err(40))
        report("elliptic manufactured order >= 1.9", rate >= 1.9, f"rate {rate:.2f}")

    def test_chemo_rhs_manufactured_order(self):
        def err(n):
            cfg = basic_config(zeta=1e-300, nu_c=10.0)
            grid = Grid.from_box(Box(-1, 1, -1, 1), n, n)
            X, Y = grid.centers_mesh()
            c = np.cos(math.pi * X) * np.cos(math.pi * Y)
            out = chemo_rhs(c, [grid.zeros(), grid.zeros()], cfg, grid)
            return np.abs(out + 2.0 * math.pi**2 * 10.0 * c).max()

        rate = math.log2(err(20) / err(40))
        report("chemoattractant RHS manufactured order >= 1.9", rate >= 1.9, f"rate {rate:.2f}")

    def test_heat_kernel_particle_diffusion(self):
        # zero velocity, uniform areas: weights follow pure exchange; the
        # recovered point densities must track the exact heat solution
        cfg = basic_config(delta=2 / 15, nu_rho=(1.0, 1.0))
        ps = init_particles(cfg)
        sp = ps.species[0]
        x, y, area = sp.x, sp.y, sp.area
        t_end = 1e-3
        steps = 40
        dt = t_end / steps

        def f(w):
            sys = ParticleSystem([SpeciesParticles(x, y, w, area)], ps.min_initial_area)
            return diffusion_weight_rhs(sys, cfg)[0]

        w = sp.w.copy()
        for _ in range(steps):
            w = ssp_rk3_step(w, dt, f)
        got = w / area
        exact = heat_kernel_gaussian(500.0, 100.0, 1.0, t_end, x, y)
        rel_l1 = np.sum(np.abs(got - exact)) / np.sum(np.abs(exact))
        report("particle diffusion matches heat kernel <= 5% L1", rel_l1 <= 0.05, f"relative L1 {rel_l1:.4f}")

    def test_ssp_rk3_scalar_value(self):
        got = ssp_rk3_step(1.0, 0.1, lambda v: -v)
        report("SSP-RK3 scalar step = 0.9048333...", abs(got - 0.9048333333333333) <= 1e-12, f"got {got!r}")
