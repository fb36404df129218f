import math

import numpy as np
import pytest
from dataclasses import replace

from conftest import basic_config, single_species_config
from fdpks.domain import Box, ConstantField, GaussianBump
from fdpks.integrator import (
    SHU_OSHER,
    SimulationError,
    advance_step,
    initial_state,
    run,
    ssp_rk3_step,
)


class TestSspRk3:
    def test_scalar_decay_matches_cubic_taylor(self):
        # independent oracle: for y' = -y the scheme reproduces the cubic
        # Taylor polynomial of exp(-dt) exactly
        dt = 0.1
        expected = 1.0 - dt + dt**2 / 2.0 - dt**3 / 6.0
        got = ssp_rk3_step(1.0, dt, lambda y: -y)
        assert got == pytest.approx(0.9048333333333333, abs=1e-12)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_constant_derivative_is_exact(self):
        y0 = np.array([1.0, -2.0])
        vel = np.array([1.0, 0.0])
        out = ssp_rk3_step(y0, 1e-3, lambda y: vel)
        np.testing.assert_allclose(out, y0 + 1e-3 * vel, rtol=0, atol=1e-18)

    def test_stage_coefficients_are_convex(self):
        for a, b in SHU_OSHER:
            assert a >= 0 and b >= 0
            assert a + b == pytest.approx(1.0)


class TestAdvanceStep:
    def test_uniform_state_only_c_evolves(self):
        # uniform density + uniform c: no velocities, no net weight
        # exchange; c follows the scalar ODE c' = g1*rho1 + g2*rho2 - z*c
        cfg = basic_config(
            initial_density=(ConstantField(2.0), ConstantField(3.0)),
            initial_c=ConstantField(1.0),
            final_time=1e-5,
            delta=0.5,
        )
        state0 = initial_state(cfg)
        state, info = advance_step(state0, cfg, next_event=cfg.final_time)
        assert state.t == cfg.final_time
        for sp0, sp in zip(state0.ps.species, state.ps.species):
            np.testing.assert_array_equal(sp.x, sp0.x)
            np.testing.assert_array_equal(sp.y, sp0.y)
            np.testing.assert_array_equal(sp.w, sp0.w)
            np.testing.assert_array_equal(sp.area, sp0.area)
        expected = ssp_rk3_step(1.0, info.dt, lambda c: 2.0 * 1.0 + 3.0 * 1.0 - cfg.zeta * c)
        np.testing.assert_allclose(state.c, expected, rtol=1e-14)

    def test_mass_conserved_over_step_with_merges(self):
        cfg = basic_config(delta=2.0 / 15.0, final_time=1e-4, use_kernel_cutoff=False)
        state0 = initial_state(cfg)
        m0 = [sp.mass() for sp in state0.ps.species]
        state, _ = advance_step(state0, cfg, next_event=cfg.final_time)
        for k, sp in enumerate(state.ps.species):
            assert sp.mass() == pytest.approx(m0[k], rel=1e-10)

    def test_example2_first_step_mass_audit(self):
        # full-resolution blowup config, cutoff disabled: one step keeps the
        # per-species mass to 1e-10 relative
        from fdpks.harness import preset_config

        cfg = replace(preset_config("example2"), snapshot_times=(), use_kernel_cutoff=False)
        state0 = initial_state(cfg)
        m0 = [sp.mass() for sp in state0.ps.species]
        state, _ = advance_step(state0, cfg, next_event=cfg.final_time)
        for k, sp in enumerate(state.ps.species):
            assert abs(sp.mass() - m0[k]) / m0[k] <= 1e-10

    def test_containment_and_nonnegativity(self):
        cfg = single_species_config(final_time=2e-3)
        state0 = initial_state(cfg)
        state, _ = advance_step(state0, cfg, next_event=cfg.final_time)
        sp = state.ps.species[0]
        assert np.all(cfg.box.contains(sp.x, sp.y))
        assert sp.w.min() >= 0
        assert sp.area.min() > 0


class TestRun:
    def test_zero_final_time_snapshot_only(self):
        # a bump resolved by the grid so the recovery consistency is tight
        bump = GaussianBump(500.0, decay=10.0)
        cfg = basic_config(final_time=0.0, snapshot_times=(0.0,), initial_density=(bump, bump))
        res = run(cfg)
        assert len(res.snapshots) == 1
        assert res.snapshots[0].t == 0.0
        assert len(res.series) == 0
        # recovered density agrees with the initial density at cell centers
        X, Y = res.grid.centers_mesh()
        exact = bump(X, Y)
        assert np.abs(res.snapshots[0].rho[0] - exact).max() <= 0.03 * exact.max()

    def test_snapshot_times_hit_exactly(self):
        cfg = basic_config(final_time=1e-4, snapshot_times=(4e-5, 1e-4), delta=0.25)
        res = run(cfg)
        assert [s.t for s in res.snapshots] == [4e-5, 1e-4]
        assert res.state.t == 1e-4

    def test_near_pure_diffusion_max_density_decays(self):
        cfg = basic_config(
            chi=(1e-300, 1e-300),
            final_time=2e-3,
            delta=0.125,
        )
        res = run(cfg)
        maxr = [m[0] for m in res.series.max_rho]
        assert len(maxr) >= 3
        assert all(b <= a * (1 + 1e-12) for a, b in zip(maxr, maxr[1:]))
        assert maxr[-1] < maxr[0]

    def test_bit_identical_series_across_runs(self):
        cfg = basic_config(final_time=5e-5, delta=0.25)
        r1 = run(cfg)
        r2 = run(cfg)
        assert r1.series.t == r2.series.t
        assert r1.series.mass == r2.series.mass
        assert r1.series.max_rho == r2.series.max_rho
        assert r1.series.dt == r2.series.dt

    def test_weight_nonnegativity_tracked(self):
        cfg = single_species_config(final_time=5e-3)
        res = run(cfg)
        assert len(res.series) > 1
        assert min(res.series.min_weight) >= 0.0

    def test_elliptic_run_advances(self):
        cfg = basic_config(
            tau=0,
            chi=(1.0, 20.0),
            nu_c=1.0,
            initial_c=None,
            initial_density=(GaussianBump(50.0), GaussianBump(50.0)),
            final_time=2e-4,
            delta=0.25,
        )
        res = run(cfg)
        assert res.state.t == pytest.approx(2e-4)
        assert np.all(res.state.c >= 0)

    def test_max_steps_aborts_with_partial(self):
        cfg = single_species_config(final_time=1.0, max_steps=3)
        with pytest.raises(SimulationError) as exc:
            run(cfg)
        assert exc.value.partial is not None
        assert len(exc.value.partial.series) == 3
