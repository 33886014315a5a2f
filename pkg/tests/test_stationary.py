import numpy as np
import pytest

from vfplab import functionals
from vfplab import kinetic
from vfplab import stationary
from vfplab.errors import DomainError
from vfplab.errors import NonConvergenceError


def test_harmonic_gibbs_measure(grid, harmonic, params):
    fixed_point = stationary.solve_gibbs(harmonic, params, grid)
    f_inf = fixed_point.density
    mean, cov = f_inf.moments()

    assert fixed_point.iterations == 1
    np.testing.assert_allclose(mean, 0.0, atol=1e-12)
    np.testing.assert_allclose(cov, np.eye(2), atol=1e-6)
    assert functionals.free_energy(f_inf, harmonic, params) == pytest.approx(
        -np.log(2.0 * np.pi), abs=1e-6
    )
    assert functionals.dissipation_I(f_inf, harmonic, params) < 1e-8


def test_interacting_fixed_point_is_stationary(grid, interacting, params):
    fixed_point = stationary.solve_gibbs(interacting, params, grid, damping=0.7)
    f_inf = fixed_point.density

    assert fixed_point.iterations > 1
    assert fixed_point.residuals[-1] < 1e-10
    assert np.max(np.abs(kinetic.vfp_rhs(f_inf, interacting, params))) < 1e-4


def test_fixed_point_needs_iterations(grid, interacting, params):
    with pytest.raises(NonConvergenceError, match="after 1 iterations"):
        stationary.solve_gibbs(interacting, params, grid, max_iter=1)


@pytest.mark.parametrize("options", [{"damping": 0.0}, {"damping": 1.5}, {"tol": 0.0}])
def test_solver_options(grid, harmonic, params, options):
    with pytest.raises(DomainError):
        stationary.solve_gibbs(harmonic, params, grid, **options)


def test_kramers_reference(params):
    reference = stationary.kramers_reference(params, 0.5)
    assert reference.var_x == pytest.approx(1.0)
    assert reference.var_v == pytest.approx(1.0)
    with pytest.raises(DomainError):
        stationary.kramers_reference(params, 0.0)


def test_kramers_moments(params):
    mean0 = [1.0, -0.5]
    cov0 = [[0.25, 0.1], [0.1, 0.5]]
    moments = stationary.kramers_moments(params, 0.5, mean0, cov0, [0.0, 40.0])

    np.testing.assert_allclose(moments.mean_x[0], 1.0)
    np.testing.assert_allclose(moments.mean_v[0], -0.5)
    np.testing.assert_allclose(moments.var_x[0], 0.25)
    np.testing.assert_allclose(moments.cov_xv[0], 0.1)
    np.testing.assert_allclose(moments.var_v[0], 0.5)

    np.testing.assert_allclose(moments.mean_x[1], 0.0, atol=1e-6)
    np.testing.assert_allclose(moments.var_x[1], 1.0, atol=1e-6)
    np.testing.assert_allclose(moments.cov_xv[1], 0.0, atol=1e-6)
    np.testing.assert_allclose(moments.var_v[1], 1.0, atol=1e-6)


def test_free_mean_velocity_decays_at_the_friction_rate(params):
    moments = stationary.kramers_moments(
        params, 0.0, [0.0, 1.0], np.zeros((2, 2)), [0.5, 1.0]
    )
    np.testing.assert_allclose(moments.mean_v, np.exp(-moments.times))


def test_gaussian_trial_minimum(grid, harmonic, params):
    var_x, F_min = stationary.gaussian_trial_minimum(harmonic, params, grid)
    assert var_x == pytest.approx(1.0, rel=1e-4)
    assert F_min == pytest.approx(-np.log(2.0 * np.pi), abs=1e-6)


def test_gibbs_fixed_point_returns_the_density(grid, interacting, params):
    f_inf = stationary.gibbs_fixed_point(interacting, params, grid, damping=0.7)
    assert f_inf.mass == pytest.approx(1.0, abs=1e-12)
    _, cov = f_inf.moments()
    assert cov[1, 1] == pytest.approx(1.0, rel=1e-6)
    assert cov[0, 0] > 1.0
