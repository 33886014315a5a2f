"""The transport module contains the degenerate Onsager transport distance.

A phase density is disintegrated into its x-marginal and its velocity
fibers. Each fiber is a one-dimensional measure, so its optimal transport
under the constant metric g = 1/M is read off the quantile function: a
piecewise-constant fiber density has a piecewise-linear quantile, and the
quadratic cost between two such quantiles is integrated exactly on the merged
levels. Densities with different x-marginals are at infinite distance.

The module also evaluates the relative entropy, the partial Fisher
information and the convexity constant of a reference density, and checks
the partial HWI inequality between them.
"""
import concurrent.futures
import dataclasses
import warnings

import numpy as np
from scipy import special

from vfplab import generic
from vfplab import util
from vfplab.density import FIBER_FLOOR
from vfplab.density import floored_log
from vfplab.density import FLOOR_EPS
from vfplab.density import marginal_x
from vfplab.density import PhaseDensity
from vfplab.errors import DomainError
from vfplab.stencils import Stencil

NORMALIZATION_TOL = 1e-8
MARGINAL_TOL = 1e-6
HWI_SLACK_ABS = 1e-6
HWI_SLACK_REL = 0.02
HWI_COLUMNS = ("pair_id", "H0", "H1", "I0", "WJ", "kappa", "lhs", "rhs", "holds")


class DerivativeQualityWarning(UserWarning):
    pass


@dataclasses.dataclass(frozen=True)
class Fiber:
    """Quantile function of a probability measure on the line.

    On the level segment [s0[k], s1[k]] the quantile rises linearly from
    q0[k] to q1[k]; the segments tile [0, 1] in order.
    """

    s0: np.ndarray
    s1: np.ndarray
    q0: np.ndarray
    q1: np.ndarray

    @classmethod
    def from_density(cls, values, edges, tol=NORMALIZATION_TOL):
        """Fiber of a density that is constant on the cells between edges."""

        values = np.asarray(values, dtype=float)
        edges = np.asarray(edges, dtype=float)

        if values.shape[0] + 1 != edges.shape[0]:
            raise DomainError(
                f"{values.shape[0]} cell values need {values.shape[0] + 1} edges"
            )

        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise DomainError("fiber density must be finite and nonnegative")

        masses = values * np.diff(edges)
        total = float(np.sum(masses))

        if abs(total - 1.0) > tol:
            raise DomainError(f"fiber is not normalized (mass {total:.10f})")

        levels = np.concatenate([[0.0], np.cumsum(masses)]) / total
        levels[-1] = 1.0
        keep = masses > 0.0

        return cls(
            s0=levels[:-1][keep],
            s1=levels[1:][keep],
            q0=edges[:-1][keep],
            q1=edges[1:][keep],
        )

    @classmethod
    def point(cls, location):
        """Dirac mass at location."""
        location = float(location)
        return cls(
            s0=np.array([0.0]),
            s1=np.array([1.0]),
            q0=np.array([location]),
            q1=np.array([location]),
        )

    def _segment(self, level):
        index = np.searchsorted(self.s1, level, side="right")
        return np.clip(index, 0, self.s1.size - 1)

    def pieces(self, lower, upper):
        """Quantile values at both ends of level intervals that each lie
        inside a single segment."""

        index = self._segment(0.5 * (lower + upper))
        width = self.s1[index] - self.s0[index]
        slope = np.divide(
            self.q1[index] - self.q0[index],
            width,
            out=np.zeros_like(width),
            where=width > 0.0,
        )
        start = self.q0[index] + slope * (lower - self.s0[index])
        end = self.q0[index] + slope * (upper - self.s0[index])
        return start, end

    def quantile(self, level):
        level = np.asarray(level, dtype=float)
        index = self._segment(level)
        width = self.s1[index] - self.s0[index]
        fraction = np.divide(
            level - self.s0[index], width, out=np.zeros_like(width), where=width > 0.0
        )
        return self.q0[index] + fraction * (self.q1[index] - self.q0[index])

    @property
    def mean(self):
        return float(np.sum((self.s1 - self.s0) * 0.5 * (self.q0 + self.q1)))

    @property
    def variance(self):
        width = self.s1 - self.s0
        second = (self.q0 ** 2 + self.q0 * self.q1 + self.q1 ** 2) / 3.0
        return float(np.sum(width * second)) - self.mean ** 2

    def cdf(self, points):
        quantiles = np.column_stack([self.q0, self.q1]).ravel()
        levels = np.column_stack([self.s0, self.s1]).ravel()
        return np.interp(points, quantiles, levels, left=0.0, right=1.0)

    def density_on(self, edges):
        """Cell densities on the cells between edges (mass outside is lost)."""
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.cdf(edges)) / np.diff(edges)


def _merged_levels(first, second):
    levels = np.union1d(
        np.union1d(first.s0, first.s1), np.union1d(second.s0, second.s1)
    )
    lower, upper = levels[:-1], levels[1:]
    keep = upper > lower
    return lower[keep], upper[keep]


@dataclasses.dataclass(frozen=True)
class MetricWeight:
    """Constant velocity block M of J = diag(0, M) and the convexity
    constant kappa_M of the reference measure in the metric 1/M."""

    M: float = 1.0
    kappa_M: float = None

    def __post_init__(self):
        if not np.isfinite(self.M) or self.M <= 0.0:
            raise DomainError(f"M must be a positive scalar, got {self.M}")

    @classmethod
    def from_reference(cls, mu_inf, M=1.0):
        return cls(M, kappa_from_assumption(mu_inf, M))


def _check_M(M):
    return MetricWeight(float(M)).M


def fiber_w2(u0x, u1x, M=1.0):
    """W_x(u0x, u1x) = sqrt((1/M) int_0^1 (Q0 - Q1)^2 ds), exact for Fiber
    quantiles."""

    M = _check_M(M)
    lower, upper = _merged_levels(u0x, u1x)
    a0, b0 = u0x.pieces(lower, upper)
    a1, b1 = u1x.pieces(lower, upper)
    d0, d1 = a0 - a1, b0 - b1
    squared = np.sum((upper - lower) * (d0 ** 2 + d0 * d1 + d1 ** 2) / 3.0)
    return float(np.sqrt(max(squared, 0.0) / M))


def displacement_interpolation(u0x, u1x, t, M=1.0):
    """Fiber at time t on the constant-speed geodesic from u0x to u1x.

    For a scalar constant M the geodesic is Q_t = (1 - t) Q0 + t Q1.
    """

    _check_M(M)

    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")

    lower, upper = _merged_levels(u0x, u1x)
    a0, b0 = u0x.pieces(lower, upper)
    a1, b1 = u1x.pieces(lower, upper)

    return Fiber(
        s0=lower,
        s1=upper,
        q0=(1.0 - t) * a0 + t * a1,
        q1=(1.0 - t) * b0 + t * b1,
    )


def _check_normalized(*densities):
    for mu in densities:
        if mu.mass_defect > NORMALIZATION_TOL:
            raise DomainError(f"density is not normalized (mass {mu.mass:.10f})")


def _check_same_grid(mu0, mu1):
    if mu0.grid != mu1.grid:
        raise DomainError("densities live on different grids")


def _column_fiber(mu, index, marginal):
    return Fiber.from_density(mu.values[index] / marginal[index], mu.grid.v_edges)


def same_marginal(mu0, mu1, marginal_tol=MARGINAL_TOL):
    """True when the x-marginals agree in L1 within marginal_tol."""
    difference = np.sum(np.abs(marginal_x(mu0) - marginal_x(mu1))) * mu0.grid.dx
    return bool(difference <= marginal_tol)


def fiber_distances(mu0, mu1, M=1.0, fiber_floor=FIBER_FLOOR, threads=1):
    """Per-column W_x and the mask of columns where both fibers exist."""

    M = _check_M(M)
    rho0, rho1 = marginal_x(mu0), marginal_x(mu1)
    usable = (rho0 > fiber_floor) & (rho1 > fiber_floor)
    indexes = np.flatnonzero(usable)

    def distance(index):
        return fiber_w2(
            _column_fiber(mu0, index, rho0), _column_fiber(mu1, index, rho1), M
        )

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(distance, indexes))
    else:
        results = [distance(index) for index in indexes]

    distances = np.full(mu0.grid.nx, np.nan)
    distances[indexes] = results

    return distances, usable


def wj_distance(
    mu0,
    mu1,
    M=1.0,
    marginal_tol=MARGINAL_TOL,
    fiber_floor=FIBER_FLOOR,
    threads=1,
):
    """W_J(mu0, mu1) for J = diag(0, M); np.inf when the x-marginals differ.

    Fiber distances are weighted by the average of the two marginals, so the
    result is symmetric. Columns where either marginal is starved are left
    out and the weights renormalized over the rest.
    """

    _check_same_grid(mu0, mu1)
    _check_normalized(mu0, mu1)

    if not same_marginal(mu0, mu1, marginal_tol):
        return np.inf

    distances, usable = fiber_distances(mu0, mu1, M, fiber_floor, threads)

    if not np.any(usable):
        raise DomainError("no x-column carries enough mass to define a fiber")

    weights = 0.5 * (marginal_x(mu0) + marginal_x(mu1))[usable]
    squared = util.pairwise_sum(weights * distances[usable] ** 2)

    return float(np.sqrt(squared / util.pairwise_sum(weights)))


def geodesic_density(mu0, mu1, t, M=1.0, fiber_floor=FIBER_FLOOR):
    """Phase density on the W_J geodesic between two densities sharing their
    x-marginal, rasterized on the common grid."""

    _check_same_grid(mu0, mu1)
    _check_normalized(mu0, mu1)

    if not same_marginal(mu0, mu1):
        raise DomainError(
            "densities with different x-marginals are not joined by a geodesic"
        )

    rho0, rho1 = marginal_x(mu0), marginal_x(mu1)
    marginal = 0.5 * (rho0 + rho1)
    edges = mu0.grid.v_edges
    values = (1.0 - t) * mu0.values + t * mu1.values

    for index in np.flatnonzero((rho0 > fiber_floor) & (rho1 > fiber_floor)):
        fiber = displacement_interpolation(
            _column_fiber(mu0, index, rho0), _column_fiber(mu1, index, rho1), t, M
        )
        values[index] = marginal[index] * fiber.density_on(edges)

    return PhaseDensity(mu0.grid, np.maximum(values, 0.0), normalize=True)


def relative_entropy(mu, mu_inf, floor=0.0):
    """H(mu | mu_inf) = int u ln(u / u_inf); np.inf when mu charges a cell
    where mu_inf vanishes."""

    _check_same_grid(mu, mu_inf)
    _check_normalized(mu, mu_inf)

    u, reference = mu.values, mu_inf.values
    charged = u > floor

    if np.any(charged & (reference <= floor)):
        return np.inf

    safe_reference = np.where(charged, reference, 1.0)
    terms = np.where(charged, special.rel_entr(u, safe_reference), 0.0)

    return float(np.sum(terms) * mu.grid.cell_area)


def partial_fisher(mu, mu_inf, M=1.0, accuracy=2, floor_eps=FLOOR_EPS):
    """I(mu | mu_inf) = int M (d_v ln(u / u_inf))^2 u."""

    M = _check_M(M)
    _check_same_grid(mu, mu_inf)
    _check_normalized(mu, mu_inf)

    if np.any((mu.values > 0.0) & (mu_inf.values <= 0.0)):
        return np.inf

    log_ratio = floored_log(mu.values, floor_eps)
    log_ratio -= floored_log(mu_inf.values, floor_eps)
    gradient = Stencil(mu.grid, accuracy).d_v(log_ratio)

    return M * mu.integrate(gradient ** 2)


def kappa_from_assumption(
    mu_inf, M=1.0, accuracy=4, rel_threshold=1e-6, quality_tol=1e-2
):
    """kappa_M = inf (-M d_vv ln u_inf) over the cells where u_inf is at least
    rel_threshold of its maximum.

    A DerivativeQualityWarning is issued when second- and higher-order
    stencils disagree by more than quality_tol (relative).
    """

    M = _check_M(M)
    log_u = floored_log(mu_inf.values)
    region = mu_inf.values >= rel_threshold * np.max(mu_inf.values)

    field = -M * Stencil(mu_inf.grid, accuracy).d_vv(log_u)[region]
    coarse = -M * Stencil(mu_inf.grid, 2).d_vv(log_u)[region]

    discrepancy = float(np.max(np.abs(field - coarse)))
    scale = max(1.0, float(np.max(np.abs(field))))

    if discrepancy > quality_tol * scale:
        warnings.warn(
            f"second derivative of ln u_inf is poorly resolved "
            f"(stencils differ by {discrepancy:.3e})",
            DerivativeQualityWarning,
        )

    return float(np.min(field))


@dataclasses.dataclass
class HWIReport:
    H0: float
    H1: float
    I0: float
    WJ: float
    kappa: float
    lhs: float
    rhs: float
    slack: float
    margin: float
    holds: bool
    degenerate: bool = False

    def as_row(self, pair_id):
        return [
            pair_id,
            self.H0,
            self.H1,
            self.I0,
            self.WJ,
            self.kappa,
            self.lhs,
            self.rhs,
            int(self.holds),
        ]


def hwi_check(mu0, mu1, mu_inf, M=1.0, kappa=None):
    """Evaluate H(mu0) - H(mu1) <= sqrt(I(mu0)) W_J - kappa_M/2 W_J^2.

    The entropies and the Fisher information are relative to mu_inf. kappa
    defaults to kappa_from_assumption(mu_inf, M). When W_J is infinite the
    inequality holds trivially and the report is marked degenerate.
    """

    metric = MetricWeight(M, kappa)

    if metric.kappa_M is None:
        metric = MetricWeight.from_reference(mu_inf, M)

    H0 = relative_entropy(mu0, mu_inf)

    if not np.isfinite(H0):
        raise DomainError("HWI needs a finite relative entropy of mu0")

    H1 = relative_entropy(mu1, mu_inf)
    I0 = partial_fisher(mu0, mu_inf, metric.M)
    W = wj_distance(mu0, mu1, metric.M)
    lhs = H0 - H1

    if not np.isfinite(W):
        return HWIReport(
            H0, H1, I0, W, metric.kappa_M, lhs, np.inf, np.inf, np.inf, True, True
        )

    rhs = np.sqrt(I0) * W - 0.5 * metric.kappa_M * W ** 2
    slack = HWI_SLACK_ABS + HWI_SLACK_REL * abs(rhs)

    return HWIReport(
        H0=H0,
        H1=H1,
        I0=I0,
        WJ=W,
        kappa=metric.kappa_M,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        margin=rhs - lhs,
        holds=bool(lhs <= rhs + slack),
    )


def entropy_along_geodesic(mu0, mu1, mu_inf, M=1.0, n_points=11):
    """Times and H(mu_t | mu_inf) along the displacement interpolation."""
    times = np.linspace(0.0, 1.0, n_points)
    entropies = np.array(
        [relative_entropy(geodesic_density(mu0, mu1, t, M), mu_inf) for t in times]
    )
    return times, entropies


def convexity_defect(mu0, mu1, mu_inf, M=1.0, kappa=None, n_points=11):
    """Smallest second difference of H along the geodesic minus kappa W_J^2.

    Nonnegative (up to discretization) when H is kappa-convex along W_J
    geodesics.
    """

    if kappa is None:
        kappa = kappa_from_assumption(mu_inf, M)

    times, entropies = entropy_along_geodesic(mu0, mu1, mu_inf, M, n_points)
    step = times[1] - times[0]
    second = np.diff(entropies, n=2) / step ** 2
    W = wj_distance(mu0, mu1, M)

    return float(np.min(second) - kappa * W ** 2), float(kappa * W ** 2)


def metric_derivative(u, params, delta=1e-3, theta=0.5):
    """Speed W_J(u_delta, u) / delta of the Onsager-only flow against its
    metric slope, both with J = diag(0, sigma^2/2)."""

    M = params.diffusion
    stepped = generic.onsager_flow(u, params, delta, 1, theta)[-1].normalized()
    speed = wj_distance(u.normalized(), stepped, M) / delta
    return float(speed), generic.metric_slope(u, params, M)


def gaussian_fiber_density(grid, marginal, means, stds, mixture=None):
    """Phase density marginal(x) * N(means(x), stds(x)^2) in v.

    mixture = (weight, shift) adds a second Gaussian bump at means + shift
    holding that weight of every fiber. Each column is normalized on the grid.
    """

    v = grid.v[None, :]
    means = np.broadcast_to(np.asarray(means, dtype=float), (grid.nx,))[:, None]
    stds = np.broadcast_to(np.asarray(stds, dtype=float), (grid.nx,))[:, None]
    fibers = np.exp(-0.5 * ((v - means) / stds) ** 2)

    if mixture is not None:
        weight, shift = mixture
        fibers /= np.sum(fibers, axis=1, keepdims=True)
        bump = np.exp(-0.5 * ((v - means - shift) / stds) ** 2)
        bump /= np.sum(bump, axis=1, keepdims=True)
        fibers = (1.0 - weight) * fibers + weight * bump

    fibers /= np.sum(fibers, axis=1, keepdims=True) * grid.dv
    marginal = np.asarray(marginal, dtype=float)
    marginal = marginal / (np.sum(marginal) * grid.dx)

    return PhaseDensity(grid, marginal[:, None] * fibers, normalize=True)


def battery_reference(grid, params):
    """Gaussian fibers N(0, 1/(beta m)) over a standard normal x-marginal."""
    marginal = np.exp(-0.5 * grid.x ** 2)
    return gaussian_fiber_density(grid, marginal, 0.0, 1.0 / np.sqrt(params.beta_m))


def battery_pairs(grid, params, n_pairs=200, n_perturbed=20, seed=0):
    """Random Gaussian-fiber pairs, then pairs whose first density carries a
    second velocity bump; every density shares the standard normal
    x-marginal."""

    rng = np.random.default_rng(seed)
    x_scale = max(abs(grid.x_min), abs(grid.x_max))
    marginal = np.exp(-0.5 * grid.x ** 2)
    reference_std = 1.0 / np.sqrt(params.beta_m)

    def random_density(mixture=None):
        offset, tilt = rng.uniform(-1.0, 1.0, size=2)
        spread, bend = rng.uniform(-0.4, 0.4, size=2)
        means = reference_std * (offset + 0.5 * tilt * grid.x / x_scale)
        stds = reference_std * np.exp(spread + 0.25 * bend * grid.x / x_scale)
        return gaussian_fiber_density(grid, marginal, means, stds, mixture)

    for index in range(n_pairs + n_perturbed):
        mixture = None
        if index >= n_pairs:
            mixture = (rng.uniform(0.1, 0.4), reference_std * rng.uniform(-1.5, 1.5))
        mu0 = random_density(mixture)
        mu1 = random_density()
        yield mu0, mu1


def hwi_battery(grid, params, n_pairs=200, n_perturbed=20, M=1.0, seed=0):
    """HWI reports of battery_pairs against battery_reference, with the
    convexity constant kappa_M = M beta m of the Gaussian reference."""

    mu_inf = battery_reference(grid, params)
    kappa = M * params.beta_m

    return [
        hwi_check(mu0, mu1, mu_inf, M, kappa)
        for mu0, mu1 in battery_pairs(grid, params, n_pairs, n_perturbed, seed)
    ]


def shifted_marginal_pair(grid, params, shift=0.5):
    """Two Gaussian-fiber densities whose x-marginals differ by a shift."""
    reference_std = 1.0 / np.sqrt(params.beta_m)
    mu0 = gaussian_fiber_density(grid, np.exp(-0.5 * grid.x ** 2), 0.0, reference_std)
    mu1 = gaussian_fiber_density(
        grid, np.exp(-0.5 * (grid.x - shift) ** 2), 0.0, reference_std
    )
    return mu0, mu1
