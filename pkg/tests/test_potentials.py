import numpy as np
import pytest

from vfplab import potentials
from vfplab.errors import ConfigError
from vfplab.potentials import GaussianKernel
from vfplab.potentials import PotentialSpec
from vfplab.potentials import Quadratic
from vfplab.potentials import QuarticDoubleWell
from vfplab.potentials import Tabulated
from vfplab.potentials import Zero


@pytest.mark.parametrize(
    "potential",
    [Quadratic(0.7, 0.3), QuarticDoubleWell(1.0, 2.0), GaussianKernel(-0.5, 0.8)],
)
def test_gradient_matches_finite_differences(potential):
    x = np.linspace(-2.0, 2.0, 9)[:, None]
    eps = 1e-6
    numeric = (potential.value(x + eps) - potential.value(x - eps)) / (2 * eps)
    np.testing.assert_allclose(potential.gradient(x)[:, 0], numeric, atol=1e-6)


def test_quartic_is_nonnegative_with_zero_minima():
    well = QuarticDoubleWell(1.0, 2.0)
    x = np.linspace(-3.0, 3.0, 601)[:, None]
    assert np.min(well.value(x)) >= 0.0
    assert well.value(np.array([[np.sqrt(2.0)]]))[0] == pytest.approx(0.0, abs=1e-12)


def test_quadratic_mean_field_matches_pairwise_average():
    kernel = Quadratic(0.5)
    rng = np.random.default_rng(1)
    positions = rng.normal(size=(50, 1))
    query = np.array([[0.3], [-1.2]])
    pairwise = np.mean(kernel.gradient(query[:, None, :] - positions[None]), axis=1)
    np.testing.assert_allclose(kernel.mean_field(query, positions), pairwise)


def test_gaussian_mean_field_matches_pairwise_average():
    kernel = GaussianKernel(1.0, 0.5)
    rng = np.random.default_rng(2)
    positions = rng.normal(size=(40, 1))
    query = positions[:5]
    pairwise = np.mean(kernel.gradient(query[:, None, :] - positions[None]), axis=1)
    np.testing.assert_allclose(kernel.mean_field(query, positions), pairwise)


def test_zero_potential():
    zero = Zero()
    assert zero.is_zero
    assert not Quadratic(1.0).is_zero
    np.testing.assert_array_equal(zero.gradient(np.ones((3, 1))), np.zeros((3, 1)))


def test_tabulated_expression_reproduces_quadratic():
    table = Tabulated.from_expression("0.5 * x**2", x_min=-5.0, x_max=5.0)
    x = np.linspace(-4.0, 4.0, 17)[:, None]
    np.testing.assert_allclose(table.value(x), 0.5 * x[:, 0] ** 2, atol=1e-8)
    np.testing.assert_allclose(table.gradient(x)[:, 0], x[:, 0], atol=1e-5)


def test_expression_with_unknown_name_is_rejected():
    with pytest.raises(ConfigError, match="unknown name"):
        Tabulated.from_expression("0.5 * y**2")


def test_tabulated_from_file(tmp_path):
    path = tmp_path / "U.dat"
    x = np.linspace(-3.0, 3.0, 31)
    np.savetxt(path, np.column_stack([x, x ** 2]))
    table = Tabulated.from_file(path)
    assert table.value(np.array([[1.0]]))[0] == pytest.approx(1.0, abs=1e-3)


def test_build_potential():
    potential = potentials.build_potential({"kind": "quadratic", "kappa": "2"})
    assert isinstance(potential, Quadratic)
    assert potential.kappa == 2.0


def test_build_potential_unknown_kind():
    with pytest.raises(ConfigError, match="unknown potential kind"):
        potentials.build_potential({"kind": "cubic"}, "confinement")


def test_build_potential_missing_parameter():
    with pytest.raises(ConfigError, match="needs 'amplitude'"):
        potentials.build_potential({"kind": "gaussian", "width": "1"}, "interaction")


def test_validate_assumptions_pass(interacting):
    report = potentials.validate_assumptions(interacting, np.linspace(-5, 5, 41))
    assert report.passed
    assert report.lipschitz_grad_U == pytest.approx(1.0)


def test_validate_assumptions_flags_asymmetric_kernel():
    asymmetric = Tabulated.from_expression("x + x**2", x_min=-6.0, x_max=6.0)
    spec = PotentialSpec(U=Quadratic(0.5), K=asymmetric)
    report = potentials.validate_assumptions(spec, np.linspace(-3, 3, 31))
    assert "K symmetry" in report.failures()


def test_negative_growth_constant_is_rejected():
    with pytest.raises(ConfigError):
        PotentialSpec(U=Quadratic(0.5), K=Zero(), kappa_U=-1.0)
