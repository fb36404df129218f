import math

import numpy as np
import pytest

from conftest import basic_config
from fdpks.chemo_fd import apply_neumann_ghosts, chemo_rhs, laplacian, solve_elliptic
from fdpks.domain import Box, Grid


def square_grid(n, box=Box(-1.0, 1.0, -1.0, 1.0)):
    return Grid.from_box(box, n, n)


class TestGhosts:
    def test_constant_field(self):
        g = apply_neumann_ghosts(np.full((3, 4), 2.5))
        assert g.shape == (5, 6)
        assert np.all(g == 2.5)

    def test_single_cell(self):
        g = apply_neumann_ghosts(np.array([[7.0]]))
        assert g.shape == (3, 3)
        assert np.all(g == 7.0)

    def test_mirror_values(self):
        f = np.arange(6.0).reshape(3, 2)
        g = apply_neumann_ghosts(f)
        np.testing.assert_array_equal(g[0, 1:-1], f[0])
        np.testing.assert_array_equal(g[-1, 1:-1], f[-1])
        np.testing.assert_array_equal(g[1:-1, 0], f[:, 0])

    def test_boundary_laplacian_accuracy_under_refinement(self):
        # mirrored ghosts keep the 5-point stencil second order at the
        # boundary for a Neumann-compatible field
        errs = []
        for n in (20, 40):
            grid = square_grid(n)
            X, Y = grid.centers_mesh()
            c = np.cos(math.pi * (X + 1.0) / 2.0)
            exact = -((math.pi / 2.0) ** 2) * c
            err = np.abs(laplacian(c, grid.dx, grid.dy) - exact).max()
            errs.append(err)
        rate = math.log2(errs[0] / errs[1])
        assert rate >= 1.9


class TestChemoRhs:
    def test_pure_decay(self):
        cfg = basic_config(zeta=1.0)
        grid = Grid.from_config(cfg)
        c = np.full((grid.nx, grid.ny), 2.0)
        out = chemo_rhs(c, [grid.zeros(), grid.zeros()], cfg, grid)
        np.testing.assert_allclose(out, -2.0, rtol=1e-14)

    def test_production_only(self):
        cfg = basic_config(gamma=(2.0, 3.0))
        grid = Grid.from_config(cfg)
        rho1 = np.full((grid.nx, grid.ny), 0.5)
        rho2 = np.full((grid.nx, grid.ny), 1.5)
        out = chemo_rhs(grid.zeros(), [rho1, rho2], cfg, grid)
        np.testing.assert_allclose(out, 2.0 * 0.5 + 3.0 * 1.5, rtol=1e-14)

    def test_manufactured_laplacian_order(self):
        cfg0 = basic_config()

        def err(n):
            grid = square_grid(n)
            X, Y = grid.centers_mesh()
            c = np.cos(math.pi * X) * np.cos(math.pi * Y)
            cfg = basic_config(zeta=1e-300, nu_c=cfg0.nu_c)
            out = chemo_rhs(c, [grid.zeros(), grid.zeros()], cfg, grid)
            exact = -2.0 * math.pi**2 * cfg.nu_c * c
            return np.abs(out - exact).max()

        rate = math.log2(err(20) / err(40))
        assert rate >= 1.9

    def test_discrete_conservation_with_zero_decay(self, rng):
        cfg = basic_config(zeta=1e-300)  # effectively zero decay
        grid = Grid.from_config(cfg)
        c = rng.standard_normal((grid.nx, grid.ny))
        out = chemo_rhs(c, [grid.zeros(), grid.zeros()], cfg, grid)
        assert abs(out.sum()) <= 1e-12 * np.abs(out).sum()


class TestSolveElliptic:
    def test_constant_solution(self):
        cfg = basic_config(tau=0, initial_c=None, gamma=(2.0, 3.0), zeta=4.0)
        grid = Grid.from_config(cfg)
        rho1 = np.full((grid.nx, grid.ny), 1.5)
        rho2 = np.full((grid.nx, grid.ny), 0.5)
        c = solve_elliptic([rho1, rho2], cfg, grid)
        np.testing.assert_allclose(c, (2.0 * 1.5 + 3.0 * 0.5) / 4.0, rtol=1e-9)

    def test_zero_sources(self):
        cfg = basic_config(tau=0, initial_c=None)
        grid = Grid.from_config(cfg)
        c = solve_elliptic([grid.zeros(), grid.zeros()], cfg, grid)
        np.testing.assert_array_equal(c, 0.0)

    def test_manufactured_solution_order(self):
        def err(n):
            cfg = basic_config(tau=0, initial_c=None, nu_c=1.0, zeta=1.0, gamma=(2.0, 1.0))
            grid = square_grid(n)
            X, Y = grid.centers_mesh()
            exact = np.cos(math.pi * X) * np.cos(math.pi * Y)
            rho1 = (2.0 * math.pi**2 * cfg.nu_c + cfg.zeta) * exact / cfg.gamma[0]
            c = solve_elliptic([rho1, grid.zeros()], cfg, grid)
            return np.abs(c - exact).max()

        rate = math.log2(err(20) / err(40))
        assert rate >= 1.9

    def test_warm_start_converges_to_same_solution(self, rng):
        cfg = basic_config(tau=0, initial_c=None)
        grid = Grid.from_config(cfg)
        rho = np.abs(rng.standard_normal((grid.nx, grid.ny)))
        cold = solve_elliptic([rho, grid.zeros()], cfg, grid)
        warm = solve_elliptic([rho, grid.zeros()], cfg, grid, c0=cold + 1e-3 * rng.standard_normal(cold.shape))
        np.testing.assert_allclose(warm, cold, atol=1e-8 * np.abs(cold).max())

    def test_rotational_symmetry(self):
        cfg = basic_config(tau=0, initial_c=None)
        grid = square_grid(16)
        X, Y = grid.centers_mesh()
        rho = np.exp(-5.0 * (X**2 + Y**2))
        c = solve_elliptic([rho, grid.zeros()], cfg, grid)
        c_rot = solve_elliptic([np.rot90(rho).copy(), grid.zeros()], cfg, grid)
        np.testing.assert_allclose(c_rot, np.rot90(c), atol=1e-9 * np.abs(c).max())

    def test_maximum_principle(self, rng):
        cfg = basic_config(tau=0, initial_c=None)
        grid = Grid.from_config(cfg)
        rho = np.abs(rng.standard_normal((grid.nx, grid.ny)))
        c = solve_elliptic([rho, grid.zeros()], cfg, grid)
        assert c.min() >= -1e-10 * c.max()
