import numpy as np
import pytest

from tests.conftest import gaussian
from vfplab import functionals
from vfplab import generic
from vfplab import kinetic
from vfplab.errors import ConfigError
from vfplab.errors import DomainError


def test_poisson_bracket_is_antisymmetric(grid):
    xx, vv = grid.mesh()
    a, b = np.sin(xx) * vv, np.cos(vv) + xx ** 2
    np.testing.assert_array_equal(
        generic.poisson_bracket(a, b, grid), -generic.poisson_bracket(b, a, grid)
    )


def test_poisson_bracket_of_coordinates(grid):
    xx, vv = grid.mesh()
    bracket = generic.poisson_bracket(xx, vv, grid)
    np.testing.assert_allclose(bracket[6:-6, 6:-6], 1.0)


def test_poisson_operator_is_antisymmetric_in_the_pairing(gibbs):
    grid = gibbs.grid
    xx, vv = grid.mesh()
    envelope = np.exp(-(xx ** 2 + vv ** 2) / 8.0)
    rng = np.random.default_rng(3)

    for _ in range(5):
        a, b, c, d = rng.normal(size=4)
        phi = envelope * np.sin(a * xx + b)
        psi = envelope * np.cos(c * vv + d)
        pairing = np.sum(
            psi * generic.poisson_apply(gibbs, phi)
            + phi * generic.poisson_apply(gibbs, psi)
        )
        assert grid.cell_area * abs(pairing) < 1e-8


def test_bracket_of_a_field_with_itself_vanishes(gibbs):
    bracket = generic.poisson_apply(gibbs, gibbs.values)
    np.testing.assert_allclose(bracket, 0.0, atol=1e-14)


def test_plain_arrays_need_a_grid(grid):
    with pytest.raises(DomainError):
        generic.poisson_bracket(np.ones(grid.shape), np.ones(grid.shape))


@pytest.mark.parametrize("spec_name", ["harmonic", "interacting"])
def test_assembled_rhs_matches_direct_rhs(request, grid, params, spec_name):
    spec = request.getfixturevalue(spec_name)
    f = gaussian(grid, mx=0.4, sx=1.2, mv=-0.3, sv=0.8)
    assembled = generic.assemble_generic_rhs(f, spec, params)
    direct = kinetic.vfp_rhs(f, spec, params)
    np.testing.assert_allclose(assembled, direct, atol=1e-10)


def test_onsager_operator_annihilates_gibbs_variation(gibbs, harmonic, params):
    psi = generic.free_energy_variation(gibbs, harmonic, params)
    np.testing.assert_allclose(
        generic.onsager_apply(gibbs, psi, params=params), 0.0, atol=1e-10
    )


def test_onsager_form_is_the_quadratic_form(grid, params):
    f = gaussian(grid, sx=0.9, sv=1.3)
    xx, vv = grid.mesh()
    psi = np.sin(0.5 * xx) * np.cos(0.3 * vv)
    form = generic.onsager_form(f, psi, params=params)
    applied = generic.onsager_apply(f, psi, params=params)
    direct = grid.cell_area * np.sum(psi * applied)
    assert form > 0.0
    assert form == pytest.approx(direct, rel=1e-10)


def test_onsager_matrix_checks():
    with pytest.raises(ConfigError, match="symmetric"):
        generic.check_onsager_matrix([[0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ConfigError, match="positive semidefinite"):
        generic.check_onsager_matrix([[0.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ConfigError, match="diagonal"):
        generic.check_onsager_matrix([[1.0, 0.5], [0.5, 1.0]])


def test_logarithmic_mean():
    np.testing.assert_allclose(generic.logarithmic_mean(2.0, 2.0), 2.0)
    np.testing.assert_allclose(generic.logarithmic_mean(1.0, np.e), np.e - 1.0)
    np.testing.assert_allclose(generic.logarithmic_mean(1.0 + 1e-9, 1.0), 1.0)
    assert generic.logarithmic_mean(0.0, 1.0) == 0.0


def test_bernoulli():
    assert generic.bernoulli(0.0) == 1.0
    z = np.array([-3.0, -0.1, 0.2, 5.0])
    np.testing.assert_allclose(generic.bernoulli(z) - generic.bernoulli(-z), -z)


def test_drift_diffusion_keeps_discrete_gibbs_profile(grid, params):
    values = np.outer(np.exp(-0.5 * grid.x ** 2), np.exp(-0.5 * grid.v ** 2))
    stepped = generic.drift_diffusion_step(values, grid, params, dt=0.1)
    np.testing.assert_allclose(stepped, values, atol=1e-14)


def test_drift_diffusion_conserves_column_masses(grid, params):
    f = gaussian(grid, sx=1.2, mv=1.0, sv=0.5)
    stepped = generic.drift_diffusion_step(f.values, grid, params, dt=0.05, theta=1.0)
    np.testing.assert_allclose(stepped.sum(axis=1), f.values.sum(axis=1), rtol=1e-12)


def test_theta_range(grid, params):
    with pytest.raises(DomainError):
        generic.drift_diffusion_step(np.ones(grid.shape), grid, params, 0.1, theta=0.2)


def test_onsager_flow_relaxes_velocities(grid, params):
    f = gaussian(grid, sx=1.2, mv=1.0, sv=0.5)
    snapshots = generic.onsager_flow(f, params, dt=0.05, n_steps=200, record_every=50)
    assert len(snapshots) == 5
    last = snapshots[-1].normalized()
    mean, cov = last.moments()
    assert mean[1] == pytest.approx(0.0, abs=1e-3)
    assert cov[1, 1] == pytest.approx(1.0, rel=1e-2)
    np.testing.assert_allclose(
        last.values.sum(axis=1), f.values.sum(axis=1), rtol=1e-8, atol=1e-14
    )


def test_metric_slope_squares_to_dissipation(grid, harmonic, params):
    f = gaussian(grid, sx=1.2, mv=0.5, sv=0.6)
    slope = generic.metric_slope(f, params)
    I = functionals.dissipation_I(f, harmonic, params, accuracy=4)
    assert slope ** 2 == pytest.approx(I, rel=2e-2)


def test_generic_residuals(grid, interacting, params):
    f = gaussian(grid, sx=1.2, sv=0.9)
    residuals = generic.generic_residuals(f, interacting, params, n_fields=3, seed=1)
    assert residuals["onsager_symmetry"] < 1e-12
    assert residuals["onsager_min_form"] >= -1e-14
    assert residuals["poisson_antisymmetry"] < 1e-8
