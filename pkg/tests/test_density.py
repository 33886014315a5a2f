import numpy as np
import pytest

from tests.conftest import gaussian
from vfplab import density
from vfplab.density import GridSpec
from vfplab.density import PhaseDensity
from vfplab.ensemble import ParticleEnsemble
from vfplab.errors import DomainError
from vfplab.errors import TruncationError


def test_grid_geometry():
    grid = GridSpec(-1.0, 1.0, -2.0, 2.0, 20, 40)
    assert grid.dx == pytest.approx(0.1)
    assert grid.dv == pytest.approx(0.1)
    assert grid.x[0] == pytest.approx(-0.95)
    assert len(grid.v_edges) == 41


def test_grid_needs_sixteen_points():
    with pytest.raises(DomainError):
        GridSpec.symmetric(1.0, 1.0, 8, 32)


def test_normalized_gaussian_moments(grid):
    f = gaussian(grid, mx=0.5, sx=0.8, mv=-0.3, sv=1.2)
    mean, cov = f.moments()
    assert f.mass == pytest.approx(1.0)
    np.testing.assert_allclose(mean, [0.5, -0.3], atol=1e-10)
    np.testing.assert_allclose(cov, np.diag([0.64, 1.44]), rtol=1e-8, atol=1e-10)


def test_negative_values_are_rejected(grid):
    with pytest.raises(DomainError):
        PhaseDensity(grid, -np.ones(grid.shape))


def test_kde_recovers_gaussian(grid):
    ensemble = ParticleEnsemble.from_gaussian(20000, seed=3)
    f = density.kde_estimate(ensemble, grid)
    exact = gaussian(grid)
    assert f.mass == pytest.approx(1.0)
    assert f.l1_distance(exact) < 0.1


def test_kde_with_explicit_bandwidth(grid):
    ensemble = ParticleEnsemble.from_gaussian(500, seed=1)
    f = density.kde_estimate(ensemble, grid, bandwidth=(0.4, 0.4))
    assert f.bandwidth == (0.4, 0.4)


def test_kde_rejects_samples_outside_grid(grid):
    ensemble = ParticleEnsemble.from_gaussian(100, mx=20.0, seed=0)
    with pytest.raises(TruncationError):
        density.kde_estimate(ensemble, grid)


def test_histogram_is_normalized(grid):
    ensemble = ParticleEnsemble.from_gaussian(1000, seed=0)
    f = density.histogram_estimate(ensemble, grid)
    assert f.mass == pytest.approx(1.0)


def test_log_derivatives_of_gaussian(gibbs):
    fields = density.log_derivatives(gibbs, accuracy=4)
    v = gibbs.grid.v[None, :]
    interior = (slice(30, -30), slice(30, -30))
    expected = -np.broadcast_to(v, gibbs.grid.shape)
    np.testing.assert_allclose(
        fields.grad_v_log_f[interior], expected[interior], atol=1e-8
    )


def test_floored_log_of_vanishing_density():
    with pytest.raises(DomainError):
        density.floored_log(np.zeros(4))


def test_marginal_and_disintegration(grid):
    f = gaussian(grid, sx=0.7)
    family = density.disintegrate(f)
    assert np.sum(family.marginal) * grid.dx == pytest.approx(1.0)
    np.testing.assert_allclose(
        np.sum(family.fibers[family.defined], axis=1) * grid.dv, 1.0, rtol=1e-12
    )
    np.testing.assert_allclose(family.reconstruct(), f.values, atol=1e-14)


def test_interpolator_reproduces_nodes(gibbs):
    spline = gibbs.interpolator()
    x, v = gibbs.grid.x[40], gibbs.grid.v[50]
    assert spline(x, v) == pytest.approx(gibbs.values[40, 50], rel=1e-10)


def test_log_derivatives_converge_at_second_order():
    grids = [GridSpec.symmetric(4.0, 4.0, n, n) for n in (32, 64, 128)]
    orders = density.derivative_order(
        density.ripple_density, density.ripple_log_fields, grids
    )
    assert set(orders) == {
        "grad_v_log_f",
        "laplace_v_f",
        "laplace_v_log_f",
        "grad_x_log_f",
    }
    assert min(orders.values()) >= 1.8


def test_derivative_order_needs_two_grids(grid):
    with pytest.raises(DomainError):
        density.derivative_order(
            density.ripple_density, density.ripple_log_fields, [grid]
        )


def test_kde_of_a_single_particle(grid):
    f = density.kde_estimate((np.array([0.5]), np.array([-1.0])), grid)
    xx, vv = grid.mesh()
    assert f.mass == pytest.approx(1.0)
    assert f.integrate(xx) == pytest.approx(0.5, abs=1e-8)
    assert f.integrate(vv) == pytest.approx(-1.0, abs=1e-8)


def test_identical_samples_with_tiny_bandwidth_are_degenerate(grid):
    samples = (np.zeros(50), np.zeros(50))
    with pytest.raises(TruncationError):
        density.kde_estimate(samples, grid, bandwidth=(1e-4, 1e-4))
