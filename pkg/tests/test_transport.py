import numpy as np
import pytest

from vfplab import transport
from vfplab.density import GridSpec
from vfplab.density import PhaseDensity
from vfplab.errors import DomainError


@pytest.fixture
def fiber_grid():
    return GridSpec.symmetric(6.0, 8.0, 32, 320)


@pytest.fixture
def battery_grid():
    return GridSpec.symmetric(4.0, 12.0, 24, 192)


def uniform(lower, upper, n=4):
    return transport.Fiber.from_density(
        np.full(n, 1.0 / (upper - lower)), np.linspace(lower, upper, n + 1)
    )


def test_fiber_of_uniform_density():
    fiber = uniform(0.0, 1.0)
    assert fiber.mean == pytest.approx(0.5)
    assert fiber.variance == pytest.approx(1.0 / 12.0)
    np.testing.assert_allclose(fiber.quantile([0.0, 0.25, 1.0]), [0.0, 0.25, 1.0])
    np.testing.assert_allclose(fiber.cdf([-1.0, 0.5, 2.0]), [0.0, 0.5, 1.0])


def test_fiber_needs_a_probability_density():
    with pytest.raises(DomainError, match="normalized"):
        transport.Fiber.from_density([1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(DomainError, match="nonnegative"):
        transport.Fiber.from_density([2.0, -1.0], [0.0, 1.0, 2.0])
    with pytest.raises(DomainError, match="edges"):
        transport.Fiber.from_density([1.0], [0.0, 0.5, 1.0])


def test_fiber_distance_of_translates():
    first, second = uniform(0.0, 1.0), uniform(2.0, 3.0)
    assert transport.fiber_w2(first, second) == pytest.approx(2.0)
    assert transport.fiber_w2(first, second, M=4.0) == pytest.approx(1.0)
    point = transport.fiber_w2(transport.Fiber.point(0.0), transport.Fiber.point(3.0))
    assert point == pytest.approx(3.0)
    with pytest.raises(DomainError, match="M"):
        transport.fiber_w2(uniform(0.0, 1.0), uniform(0.0, 1.0), M=0.0)


def test_fiber_distance_of_gaussians():
    edges = np.linspace(-15.0, 15.0, 3001)
    centers = 0.5 * (edges[1:] + edges[:-1])

    def normal(mean, std):
        values = np.exp(-0.5 * ((centers - mean) / std) ** 2)
        return values / np.sum(values * np.diff(edges))

    first = transport.Fiber.from_density(normal(0.0, 1.0), edges)
    second = transport.Fiber.from_density(normal(1.0, 2.0), edges)

    assert transport.fiber_w2(first, second) == pytest.approx(np.sqrt(2.0), rel=1e-3)


def test_displacement_interpolation_has_constant_speed():
    first, second = uniform(0.0, 1.0), uniform(1.0, 4.0)
    total = transport.fiber_w2(first, second)
    middle = transport.displacement_interpolation(first, second, 0.25)

    assert transport.fiber_w2(first, middle) == pytest.approx(0.25 * total)
    assert transport.fiber_w2(middle, second) == pytest.approx(0.75 * total)
    assert middle.mean == pytest.approx(0.75 * 0.5 + 0.25 * 2.5)
    with pytest.raises(DomainError):
        transport.displacement_interpolation(first, second, 1.5)


def test_wj_distance(battery_grid, params):
    mu0, mu1 = next(transport.battery_pairs(battery_grid, params, n_pairs=1))

    distance = transport.wj_distance(mu0, mu1)
    assert 0.0 < distance < np.inf
    assert transport.wj_distance(mu1, mu0) == pytest.approx(distance, rel=1e-12)
    assert transport.wj_distance(mu0, mu0) == pytest.approx(0.0, abs=1e-12)
    assert transport.wj_distance(mu0, mu1, M=4.0) == pytest.approx(0.5 * distance)


def test_wj_distance_across_marginals_is_infinite(battery_grid, params):
    mu0, mu1 = transport.shifted_marginal_pair(battery_grid, params)
    assert not transport.same_marginal(mu0, mu1)
    assert transport.wj_distance(mu0, mu1) == np.inf
    with pytest.raises(DomainError):
        transport.geodesic_density(mu0, mu1, 0.5)


def test_geodesic_end_points(battery_grid, params):
    mu0, mu1 = next(transport.battery_pairs(battery_grid, params, n_pairs=1))
    assert transport.geodesic_density(mu0, mu1, 0.0).l1_distance(mu0) < 1e-10
    assert transport.geodesic_density(mu0, mu1, 1.0).l1_distance(mu1) < 1e-10


def test_relative_entropy_and_fisher_information(fiber_grid, params):
    marginal = np.exp(-0.5 * fiber_grid.x ** 2)
    reference = transport.gaussian_fiber_density(fiber_grid, marginal, 0.0, 1.0)
    narrow = transport.gaussian_fiber_density(fiber_grid, marginal, 0.0, 0.5)

    assert transport.relative_entropy(reference, reference) == pytest.approx(0.0)
    assert transport.relative_entropy(narrow, reference) == pytest.approx(
        0.5 * (0.25 - 1.0 - np.log(0.25)), rel=1e-3
    )
    assert transport.partial_fisher(narrow, reference) == pytest.approx(2.25, rel=1e-3)
    assert transport.partial_fisher(reference, reference) == 0.0


def test_relative_entropy_needs_absolute_continuity(fiber_grid):
    marginal = np.exp(-0.5 * fiber_grid.x ** 2)
    mu = transport.gaussian_fiber_density(fiber_grid, marginal, 0.0, 1.0)
    values = mu.values.copy()
    values[:, : fiber_grid.nv // 2] = 0.0
    half = PhaseDensity(fiber_grid, values, normalize=True)

    assert transport.relative_entropy(mu, half) == np.inf
    assert transport.relative_entropy(half, mu) == pytest.approx(np.log(2.0), rel=1e-6)


def test_convexity_constant_of_the_reference(battery_grid, params):
    mu_inf = transport.battery_reference(battery_grid, params)
    assert transport.kappa_from_assumption(mu_inf) == pytest.approx(1.0, rel=1e-6)
    kappa = transport.kappa_from_assumption(mu_inf, M=0.5)
    assert kappa == pytest.approx(0.5, rel=1e-6)


def test_hwi_battery(battery_grid, params):
    reports = transport.hwi_battery(battery_grid, params, n_pairs=4, n_perturbed=2)
    assert len(reports) == 6
    for report in reports:
        assert report.holds
        assert not report.degenerate
        assert report.kappa == pytest.approx(1.0)
        assert report.H0 >= 0.0 and report.H1 >= 0.0


def test_hwi_with_infinite_distance(battery_grid, params):
    mu0, mu1 = transport.shifted_marginal_pair(battery_grid, params)
    mu_inf = transport.battery_reference(battery_grid, params)
    report = transport.hwi_check(mu0, mu1, mu_inf, kappa=1.0)
    assert report.degenerate and report.holds
    assert report.WJ == np.inf
    assert report.as_row(3)[0] == 3


def test_entropy_is_convex_along_geodesics(battery_grid, params):
    mu_inf = transport.battery_reference(battery_grid, params)
    pairs = transport.battery_pairs(battery_grid, params, n_pairs=3, n_perturbed=0)
    for mu0, mu1 in pairs:
        defect, kappa_W2 = transport.convexity_defect(mu0, mu1, mu_inf, kappa=1.0)
        assert defect >= -(0.02 * kappa_W2 + 1e-4)


def test_metric_derivative_matches_the_slope(battery_grid, params):
    u = transport.gaussian_fiber_density(
        battery_grid,
        np.exp(-0.5 * battery_grid.x ** 2),
        0.5 * np.tanh(battery_grid.x),
        2.0,
    )
    speed, slope = transport.metric_derivative(u, params)
    assert slope > 0.1
    assert speed == pytest.approx(slope, rel=0.05, abs=1e-3)
