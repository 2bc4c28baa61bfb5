import numpy as np
import pytest

from nsac.channel import build_grid
from nsac.elliptic_bs import (BulkSurfaceProblem, SingularSystemError, modal_solver,
                              residuals, solve_bulk_surface)
from oracles import dense_bulk_surface


def _random(grid, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.shape), rng.standard_normal((2,) + grid.surface_shape)


class TestSolve:
    def test_constants(self):
        g = build_grid(2, [16], 9)
        H = np.zeros(g.shape)
        h = np.full((2, 16), 1.7)
        phi, psi = solve_bulk_surface(g, BulkSurfaceProblem(0.0, 1.0, 1.0, H, h))
        assert np.abs(phi - 1.7).max() <= 1e-12
        assert np.abs(psi - 1.7).max() <= 1e-12

    def test_harmonic_second_order(self):
        errs = []
        for nz in (9, 17, 33):
            g = build_grid(2, [16], nz)
            x, z = g.mesh()
            exact = np.cos(x) * np.cosh(z) / np.cosh(1)
            (xs,) = g.surface_mesh()
            # dn phi = tanh(1) cos x on both walls, a_surf = 2, gamma = 0
            h = np.stack([(2 + np.tanh(1)) * np.cos(xs)] * 2)
            phi, _ = solve_bulk_surface(g, BulkSurfaceProblem(0.0, 2.0, 0.0, np.zeros(g.shape), h))
            errs.append(np.abs(phi - exact).max())
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all((orders > 1.8) & (orders < 2.2))

    @pytest.mark.parametrize("closure", ["one_sided", "flux", "dirichlet"])
    def test_matches_dense_oracle(self, closure):
        g = build_grid(2, [16], 9)
        for seed in range(5):
            H, h = _random(g, seed)
            ref = dense_bulk_surface(g, 0.8, 1.3, 0.25, H, h, closure, 0.05)
            phi, psi = solve_bulk_surface(
                g, BulkSurfaceProblem(0.8, 1.3, 0.25, H, h, 0.05, closure))
            assert np.abs(phi - ref).max() <= 1e-10 * np.abs(ref).max()
            assert np.array_equal(psi[0], phi[:, 0]) and np.array_equal(psi[1], phi[:, -1])

    def test_matches_dense_oracle_3d(self):
        g = build_grid(3, [8, 8], 7, [2 * np.pi, 4.0])
        H, h = _random(g, 11)
        ref = dense_bulk_surface(g, 1.0, 0.5, 0.1, H, h, "flux")
        phi, _ = solve_bulk_surface(g, BulkSurfaceProblem(1.0, 0.5, 0.1, H, h, closure="flux"))
        assert np.abs(phi - ref).max() <= 1e-10 * np.abs(ref).max()

    def test_residuals(self):
        g = build_grid(2, [16], 17)
        H, h = _random(g, 2)
        for closure in ("one_sided", "flux"):
            prob = BulkSurfaceProblem(2.0, 1.0, 0.3, H, h, closure=closure)
            phi, _ = solve_bulk_surface(g, prob)
            rb, rs = residuals(g, prob, phi)
            scale = max(np.abs(H).max(), np.abs(h).max(), np.abs(phi).max())
            assert rb <= 1e-10 * scale and rs <= 1e-10 * scale

    def test_linearity(self):
        g = build_grid(2, [16], 9)
        H1, h1 = _random(g, 4)
        H2, h2 = _random(g, 5)
        solve = lambda H, h: solve_bulk_surface(g, BulkSurfaceProblem(1.0, 1.0, 0.5, H, h))[0]
        assert np.abs(solve(H1 + H2, h1 + h2) - solve(H1, h1) - solve(H2, h2)).max() <= 1e-10

    def test_singular(self):
        g = build_grid(2, [16], 9)
        H, h = _random(g, 0)
        with pytest.raises(SingularSystemError):
            solve_bulk_surface(g, BulkSurfaceProblem(0.0, 0.0, 1.0, H, h))
        with pytest.raises(SingularSystemError):
            solve_bulk_surface(g, BulkSurfaceProblem(-1.0, 1.0, 0.0, H, h))

    def test_bad_shapes(self):
        g = build_grid(2, [16], 9)
        with pytest.raises(ValueError):
            solve_bulk_surface(g, BulkSurfaceProblem(1.0, 1.0, 0.0, np.zeros(g.shape),
                                                     np.zeros((2, 8))))

    def test_solver_cache(self):
        g = build_grid(2, [16], 9)
        assert modal_solver(g, 1.0, 1.0, 0.0) is modal_solver(build_grid(2, [16], 9), 1.0, 1.0, 0.0)
        with pytest.raises(ValueError, match="closure"):
            modal_solver(g, 1.0, 1.0, 0.0, 0.0, "spectral")
