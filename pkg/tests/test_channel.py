import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsac.channel import BOTTOM, TOP, GridError, build_grid, wall_index


@pytest.fixture
def g2():
    return build_grid(2, [16], 9)


@pytest.fixture
def g3():
    return build_grid(3, [8, 8], 9, [2 * np.pi, 3.0])


class TestBuildGrid:
    def test_2d_sizes(self, g2):
        assert g2.dz == 0.25
        assert math.isclose(g2.volume, 4 * np.pi, rel_tol=1e-14)
        assert g2.z[0] == -1.0 and g2.z[-1] == 1.0
        assert g2.curvature == 0.0

    def test_3d_volume(self):
        g = build_grid(3, [8, 8], 5, [2 * np.pi, 2 * np.pi])
        assert math.isclose(g.volume, 8 * np.pi ** 2, rel_tol=1e-14)

    @pytest.mark.parametrize("grid", ["g2", "g3"])
    def test_quad_weights_sum_to_volume(self, grid, request):
        g = request.getfixturevalue(grid)
        assert abs(g.quad_weights.sum() - g.volume) <= 1e-12 * g.volume

    @pytest.mark.parametrize("args,dimname", [
        ((2, [10], 9), "x"),
        ((3, [8, 12], 9), "y"),
        ((2, [16], 8), "z"),
        ((2, [16], 3), "z"),
        ((2, [4], 9), "x"),
    ])
    def test_invalid_size_names_dimension(self, args, dimname):
        with pytest.raises(GridError, match=f"dimension {dimname}"):
            build_grid(*args)

    def test_bad_dim_and_period(self):
        with pytest.raises(GridError):
            build_grid(4, [8, 8, 8], 9)
        with pytest.raises(GridError, match="dimension x"):
            build_grid(2, [8], 9, [-1.0])

    def test_equality_and_hash(self):
        assert build_grid(2, [16], 9) == build_grid(2, [16], 9)
        assert hash(build_grid(2, [16], 9)) == hash(build_grid(2, [16], 9))
        assert build_grid(2, [16], 9) != build_grid(2, [16], 17)

    def test_wall_index(self):
        assert wall_index("bottom") == BOTTOM and wall_index("top") == TOP
        with pytest.raises(GridError):
            wall_index("side")


class TestBulkOperators:
    def test_gradient_of_constant(self, g3):
        assert np.abs(g3.gradient(np.full(g3.shape, 2.5))).max() <= 1e-13

    def test_gradient_sin_x(self, g2):
        x, _ = g2.mesh()
        assert np.abs(g2.gradient(np.sin(x))[0] - np.cos(x)).max() <= 1e-12

    def test_gradient_z_squared_exact(self, g2):
        _, z = g2.mesh()
        gz = g2.gradient(z ** 2)[-1]
        assert np.abs(gz - 2 * z).max() <= 1e-12  # one-sided walls are exact too

    def test_gradient_y_direction(self, g3):
        _, y, _ = g3.mesh()
        k = 2 * np.pi / 3.0
        assert np.abs(g3.gradient(np.sin(k * y))[1] - k * np.cos(k * y)).max() <= 1e-11

    def test_divergence(self, g2):
        x, _ = g2.mesh()
        v = np.stack([np.sin(x), np.zeros_like(x)])
        assert np.abs(g2.divergence(v) - np.cos(x)).max() <= 1e-12
        assert np.abs(g2.divergence(np.ones((2,) + g2.shape))).max() <= 1e-13

    def test_div_grad_equals_laplacian_for_quadratic_profile(self, g2):
        # exact identity only holds where the z stencils agree on the profile
        x, z = g2.mesh()
        f = np.cos(x) * (1 + z + 0.5 * z ** 2)
        assert np.abs(g2.divergence(g2.gradient(f)) - g2.laplacian(f)).max() <= 1e-12

    def test_div_grad_converges_to_laplacian(self):
        errs = []
        for nz in (17, 33, 65):
            g = build_grid(2, [16], nz)
            x, z = g.mesh()
            f = np.cos(x) * np.cos(0.5 * np.pi * z)
            diff = g.divergence(g.gradient(f)) - g.laplacian(f)
            errs.append(np.abs(diff[:, 2:-2]).max())
        assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5

    def test_laplacian(self, g2):
        x, z = g2.mesh()
        assert np.abs(g2.laplacian(np.cos(2 * x)) + 4 * np.cos(2 * x)).max() <= 1e-12
        assert np.abs(g2.laplacian(z ** 2) - 2).max() <= 1e-12
        assert np.abs(g2.laplacian(np.full(g2.shape, 3.0))).max() <= 1e-12

    def test_shape_validation(self, g2):
        with pytest.raises(GridError, match="shape"):
            g2.gradient(np.zeros((16, 8)))
        with pytest.raises(GridError, match="non-finite"):
            g2.laplacian(np.full(g2.shape, np.nan))


class TestSurfaceOperators:
    def test_constant(self, g2):
        s = np.full(g2.surface_shape, 2.0)
        assert np.abs(g2.tangential_gradient(s)).max() <= 1e-13
        assert np.abs(g2.tangential_laplacian(s)).max() <= 1e-13

    def test_sin(self, g2):
        (x,) = g2.surface_mesh()
        s = np.sin(x)
        assert np.abs(g2.tangential_gradient(s)[0] - np.cos(x)).max() <= 1e-12
        assert np.abs(g2.tangential_laplacian(s) + np.sin(x)).max() <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_parseval(self, seed):
        g = build_grid(3, [8, 16], 5, [2.0, 5.0])
        s = np.random.default_rng(seed).standard_normal(g.surface_shape)
        lhs = g.surface_integral(s * g.tangential_laplacian(s))
        gt = g.tangential_gradient(s)
        # the Nyquist mode has no first derivative, so compare with the Parseval form
        rhs = -g.tangential_norm_sq(s)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
        assert g.surface_integral(np.sum(gt ** 2, axis=0)) <= -lhs + 1e-10

    def test_normal_derivative(self, g2):
        x, z = g2.mesh()
        assert np.allclose(g2.normal_derivative(z, "top"), 1.0, atol=1e-13)
        assert np.allclose(g2.normal_derivative(z, "bottom"), -1.0, atol=1e-13)
        assert np.abs(g2.normal_derivative(np.full(g2.shape, 4.0), TOP)).max() <= 1e-13

    def test_normal_derivative_second_order(self):
        errs, hs = [], []
        for nz in (9, 17, 33, 65):
            g = build_grid(2, [8], nz)
            f = np.cos(0.5 * np.pi * g.mesh()[1])
            errs.append(max(np.abs(g.normal_derivative(f, w) + np.pi / 2).max() for w in (0, 1)))
            hs.append(g.dz)
        orders = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(2)
        assert np.all(orders > 1.9)

    def test_trace(self, g2):
        x, z = g2.mesh()
        f = np.sin(x) * z
        assert np.array_equal(g2.trace(f, TOP), np.sin(x[:, -1]))
        assert np.array_equal(g2.trace(np.full(g2.shape, 2.0), BOTTOM), np.full(16, 2.0))
        f = np.cos(x) * np.exp(z)
        assert np.abs(g2.trace(g2.gradient(f)[-1], TOP) - g2.normal_derivative(f, TOP)).max() <= 1e-12
        assert np.abs(g2.trace(g2.gradient(f)[-1], BOTTOM) + g2.normal_derivative(f, BOTTOM)).max() <= 1e-12


class TestQuadrature:
    def test_mean_constant_and_sine(self, g3):
        assert math.isclose(g3.volume_mean(np.full(g3.shape, 1.7)), 1.7, rel_tol=1e-14)
        x = g3.mesh()[0]
        assert abs(g3.volume_mean(np.sin(x))) <= 1e-14

    def test_random_matches_trapezoid(self, g2):
        f = np.random.default_rng(3).standard_normal(g2.shape)
        ref = np.trapezoid(f, g2.z, axis=-1).sum() * g2.dx[0]
        assert abs(g2.volume_integral(f) - ref) <= 1e-13 * abs(ref)

    def test_surface_integral(self, g3):
        s = np.full(g3.surface_shape, 2.0)
        assert math.isclose(g3.surface_integral(s), 2 * g3.area, rel_tol=1e-14)

    def test_dirichlet_norm_matches_flux_laplacian(self, g2):
        # d/df of 1/2 dirichlet_norm_sq equals -(weighted) laplacian in flux form
        rng = np.random.default_rng(1)
        f = rng.standard_normal(g2.shape)
        v = rng.standard_normal(g2.shape)
        eps = 1e-6
        fd = (g2.dirichlet_norm_sq(f + eps * v) - g2.dirichlet_norm_sq(f - eps * v)) / (4 * eps)
        lap_t = g2.laplacian_periodic(f)
        dzf = np.diff(f, axis=-1) / g2.dz
        flux = np.zeros_like(f)
        flux[..., :-1] -= dzf
        flux[..., 1:] += dzf
        exact = g2.volume_integral(-lap_t * v) + np.sum(flux * v) * g2.cell_area
        assert abs(fd - exact) <= 1e-6 * abs(exact)
