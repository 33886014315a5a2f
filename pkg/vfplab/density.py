"""The density module contains the gridded phase-space densities (d=1).

Grids are cell centred: node i sits at x_min + (i + 1/2) dx, and integrals
are midpoint sums, so the mass of a density is sum(values) * dx * dv.
Densities are estimated from particles by a Gaussian product kernel (or a
histogram cross-check) and carry the derivative fields used by the
free-energy functionals.
"""
import dataclasses

import numpy as np
from scipy import interpolate
from scipy import stats

from vfplab import fitting
from vfplab.errors import DomainError
from vfplab.errors import TruncationError
from vfplab.stencils import Stencil

FLOOR_EPS = 1e-12
FIBER_FLOOR = 1e-10
OUTLIER_FRACTION = 1e-3
KDE_CHUNK = 4096


@dataclasses.dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    v_min: float
    v_max: float
    nx: int
    nv: int

    def __post_init__(self):
        bounds = (self.x_min, self.x_max, self.v_min, self.v_max)
        if not all(np.isfinite(bounds)):
            raise DomainError(f"grid bounds must be finite, got {bounds}")
        if not (self.x_min < self.x_max and self.v_min < self.v_max):
            raise DomainError(f"grid bounds are not increasing: {bounds}")
        if self.nx < 16 or self.nv < 16:
            raise DomainError(f"grids need nx, nv >= 16, got {self.nx}x{self.nv}")

    @classmethod
    def from_samples(cls, positions, velocities, nx=128, nv=128, n_std=6.0):
        """Bounds at mean +/- n_std standard deviations of the samples."""
        positions = np.ravel(positions)
        velocities = np.ravel(velocities)
        bounds = []
        for values in (positions, velocities):
            center, spread = np.mean(values), np.std(values)
            if spread == 0.0:
                spread = 1.0
            bounds.extend([center - n_std * spread, center + n_std * spread])
        return cls(bounds[0], bounds[1], bounds[2], bounds[3], nx, nv)

    @classmethod
    def symmetric(cls, x_half, v_half, nx, nv):
        return cls(-x_half, x_half, -v_half, v_half, nx, nv)

    @property
    def shape(self):
        return self.nx, self.nv

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dv(self):
        return (self.v_max - self.v_min) / self.nv

    @property
    def cell_area(self):
        return self.dx * self.dv

    @property
    def x(self):
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def v(self):
        return self.v_min + (np.arange(self.nv) + 0.5) * self.dv

    @property
    def x_edges(self):
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    @property
    def v_edges(self):
        return np.linspace(self.v_min, self.v_max, self.nv + 1)

    def mesh(self):
        return np.meshgrid(self.x, self.v, indexing="ij")

    def contains(self, x, v):
        inside_x = (x >= self.x_min) & (x <= self.x_max)
        return inside_x & (v >= self.v_min) & (v <= self.v_max)

    def refined(self, factor=2):
        return dataclasses.replace(self, nx=self.nx * factor, nv=self.nv * factor)


class PhaseDensity:
    """Nonnegative density values on a GridSpec (shape nx x nv)."""

    def __init__(self, grid, values, normalize=False):
        values = np.array(values, dtype=float)

        if values.shape != grid.shape:
            raise DomainError(f"values shape {values.shape} != grid {grid.shape}")

        if not np.all(np.isfinite(values)):
            raise DomainError("density has non-finite values")

        if np.any(values < 0.0):
            raise DomainError(f"density has negative values (min {values.min():.3e})")

        self.grid = grid
        self.values = values
        self.bandwidth = None

        if normalize:
            mass = self.mass
            if mass <= 0.0:
                raise DomainError("cannot normalize a density with zero mass")
            self.values = values / mass

    @classmethod
    def from_function(cls, grid, function, normalize=True):
        """Sample function(X, V) at the cell centres."""
        xx, vv = grid.mesh()
        return cls(grid, function(xx, vv), normalize=normalize)

    @property
    def mass(self):
        return float(np.sum(self.values) * self.grid.cell_area)

    @property
    def mass_defect(self):
        return abs(1.0 - self.mass)

    def normalized(self):
        return PhaseDensity(self.grid, self.values, normalize=True)

    def with_values(self, values, normalize=False):
        return PhaseDensity(self.grid, values, normalize=normalize)

    def x_marginal(self):
        return marginal_x(self)

    def integrate(self, field):
        """Midpoint quadrature of field * f over the grid."""
        return float(np.sum(field * self.values) * self.grid.cell_area)

    def l1_distance(self, other):
        return float(np.sum(np.abs(self.values - other.values)) * self.grid.cell_area)

    def moments(self):
        """Mean and covariance of (x, v) under the density."""
        xx, vv = self.grid.mesh()
        mean = np.array([self.integrate(xx), self.integrate(vv)])
        dx, dv = xx - mean[0], vv - mean[1]
        cov = np.array(
            [
                [self.integrate(dx * dx), self.integrate(dx * dv)],
                [self.integrate(dx * dv), self.integrate(dv * dv)],
            ]
        )
        return mean, cov

    def interpolator(self, field=None):
        """Bicubic interpolant of a grid field (the density by default)."""
        return GridInterpolator(self.grid, self.values if field is None else field)


class GridInterpolator:
    """Callable (x, v) -> field with bicubic splines on the cell centres."""

    def __init__(self, grid, field):
        self.grid = grid
        self.spline = interpolate.RectBivariateSpline(grid.x, grid.v, field, kx=3, ky=3)

    def __call__(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(x, v).shape
        x, v = np.broadcast_to(x, shape).ravel(), np.broadcast_to(v, shape).ravel()
        return self.spline.ev(x, v).reshape(shape)


def silverman_bandwidth(samples):
    """Per-axis rule of thumb for a 2-d Gaussian product kernel."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    spread = np.std(samples, ddof=1) if n > 1 else 0.0
    iqr = stats.iqr(samples) / 1.349 if n > 1 else 0.0
    scale = min(spread, iqr) if iqr > 0.0 else spread
    return scale * (4.0 / (4.0 * n)) ** (1.0 / 6.0)


def kde_estimate(ensemble, grid, bandwidth="silverman"):
    """Gaussian product-kernel density of a one-dimensional ensemble.

    bandwidth is "silverman" or an (h_x, h_v) pair. The result is
    renormalized on the grid.
    """

    x, v = _one_dimensional(ensemble)
    _check_outliers(grid, x, v)

    if isinstance(bandwidth, str):
        if bandwidth != "silverman":
            raise DomainError(f"unknown bandwidth policy '{bandwidth}'")
        h_x, h_v = silverman_bandwidth(x), silverman_bandwidth(v)
        # A sample without spread falls back to a kernel resolved by the grid.
        h_x = h_x if h_x > 0.0 else 2.0 * grid.dx
        h_v = h_v if h_v > 0.0 else 2.0 * grid.dv
    else:
        h_x, h_v = (float(h) for h in np.broadcast_to(bandwidth, 2))

    if h_x < 0.5 * grid.dx or h_v < 0.5 * grid.dv:
        raise TruncationError(
            f"degenerate bandwidth ({h_x:.3e}, {h_v:.3e}) below half the grid "
            f"spacing ({grid.dx:.3e}, {grid.dv:.3e})"
        )

    values = np.zeros(grid.shape)
    xc, vc = grid.x, grid.v

    for start in range(0, len(x), KDE_CHUNK):
        chunk = slice(start, start + KDE_CHUNK)
        bx = np.exp(-0.5 * ((xc[:, None] - x[None, chunk]) / h_x) ** 2)
        bv = np.exp(-0.5 * ((vc[:, None] - v[None, chunk]) / h_v) ** 2)
        values += bx @ bv.T

    if not np.any(values > 0.0):
        raise TruncationError("kernel estimate vanishes on the grid")

    density = PhaseDensity(grid, values, normalize=True)
    density.bandwidth = (h_x, h_v)

    return density


def histogram_estimate(ensemble, grid):
    """Normalized 2-d histogram on the grid cells."""
    x, v = _one_dimensional(ensemble)
    _check_outliers(grid, x, v)
    counts, _, _ = np.histogram2d(x, v, bins=[grid.x_edges, grid.v_edges])
    return PhaseDensity(grid, counts, normalize=True)


def _one_dimensional(ensemble):
    positions = getattr(ensemble, "positions", None)
    if positions is None:
        positions, velocities = ensemble
    else:
        velocities = ensemble.velocities
    positions = np.asarray(positions, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    if positions.ndim == 2 and positions.shape[1] != 1:
        raise DomainError("grid densities require d = 1")
    return positions.ravel(), velocities.ravel()


def _check_outliers(grid, x, v):
    if len(x) == 0:
        raise DomainError("cannot estimate a density from an empty ensemble")
    outside = 1.0 - np.count_nonzero(grid.contains(x, v)) / len(x)
    if outside > OUTLIER_FRACTION:
        raise TruncationError(
            f"{100 * outside:.3f}% of the samples lie outside the grid "
            f"(limit {100 * OUTLIER_FRACTION:.1f}%)"
        )


def floored_log(values, floor_eps=FLOOR_EPS):
    """ln max(values, floor_eps * max values)."""
    values = np.asarray(values, dtype=float)
    top = np.max(values)
    if top <= 0.0:
        raise DomainError("cannot take the logarithm of a vanishing density")
    return np.log(np.maximum(values, floor_eps * top))


@dataclasses.dataclass
class LogDerivatives:
    grad_v_log_f: np.ndarray
    laplace_v_f: np.ndarray
    laplace_v_log_f: np.ndarray
    grad_x_log_f: np.ndarray


def log_derivatives(f, floor_eps=FLOOR_EPS, accuracy=2):
    """Finite-difference fields of f and ln f (one-sided at the boundary)."""

    if floor_eps <= 0.0:
        raise DomainError(f"floor_eps must be positive, got {floor_eps}")

    stencil = Stencil(f.grid, accuracy)
    floored = np.maximum(f.values, floor_eps * np.max(f.values))
    log_f = np.log(floored)

    return LogDerivatives(
        grad_v_log_f=stencil.d_v(log_f),
        laplace_v_f=stencil.d_vv(floored),
        laplace_v_log_f=stencil.d_vv(log_f),
        grad_x_log_f=stencil.d_x(log_f),
    )


@dataclasses.dataclass
class LogHessian:
    grad: np.ndarray  # (2, nx, nv): d/dx, d/dv
    hessian: np.ndarray  # (2, 2, nx, nv)


def log_hessian(f, floor_eps=FLOOR_EPS, accuracy=2):
    """Gradient and full Hessian of ln f on the grid."""
    stencil = Stencil(f.grid, accuracy)
    log_f = floored_log(f.values, floor_eps)
    d_xv = stencil.d_xv(log_f)
    return LogHessian(
        grad=np.array([stencil.d_x(log_f), stencil.d_v(log_f)]),
        hessian=np.array(
            [[stencil.d_xx(log_f), d_xv], [d_xv, stencil.d_vv(log_f)]]
        ),
    )


def ripple_density(xx, vv, amplitude=0.3):
    """exp(-x^2/2 - v^2/2 + a sin x cos v), a smooth non-Gaussian test density."""
    return np.exp(-0.5 * xx ** 2 - 0.5 * vv ** 2 + amplitude * np.sin(xx) * np.cos(vv))


def ripple_log_fields(xx, vv, amplitude=0.3):
    """Exact LogDerivatives fields of ripple_density."""
    grad_v = -vv - amplitude * np.sin(xx) * np.sin(vv)
    laplace_v = -1.0 - amplitude * np.sin(xx) * np.cos(vv)
    return {
        "grad_v_log_f": grad_v,
        "laplace_v_f": ripple_density(xx, vv, amplitude) * (grad_v ** 2 + laplace_v),
        "laplace_v_log_f": laplace_v,
        "grad_x_log_f": -xx + amplitude * np.cos(xx) * np.cos(vv),
    }


def derivative_order(function, exact, grids, accuracy=2, rel_threshold=1e-6):
    """Observed convergence order of the log_derivatives fields.

    function(X, V) is sampled on each grid of a refinement sequence and the
    max error against exact(X, V) (a dict keyed like LogDerivatives) is taken
    where the density exceeds rel_threshold times its maximum. Returns
    {field: order} from a log-log fit of error against max(dx, dv).
    """

    if len(grids) < 2:
        raise DomainError("a convergence order needs at least two grids")

    spacings = []
    errors = {}

    for grid in grids:
        xx, vv = grid.mesh()
        f = PhaseDensity(grid, function(xx, vv))
        fields = log_derivatives(f, accuracy=accuracy)
        region = f.values > rel_threshold * np.max(f.values)
        for name, reference in exact(xx, vv).items():
            error = np.abs(getattr(fields, name) - reference)[region]
            errors.setdefault(name, []).append(float(np.max(error)))
        spacings.append(max(grid.dx, grid.dv))

    return {
        name: fitting.fit_convergence_order(spacings, values)[0]
        for name, values in errors.items()
    }


def marginal_x(f):
    """x-marginal density: sum over v times dv."""
    return np.sum(f.values, axis=1) * f.grid.dv


@dataclasses.dataclass
class FiberFamily:
    """Disintegration of a density: x-marginal and per-column v-fibers.

    fibers[i] integrates to one over v for every defined column; undefined
    (starved) columns hold NaN.
    """

    x_nodes: np.ndarray
    v_nodes: np.ndarray
    dv: float
    marginal: np.ndarray
    fibers: np.ndarray
    defined: np.ndarray

    def reconstruct(self):
        fibers = np.where(self.defined[:, None], self.fibers, 0.0)
        return self.marginal[:, None] * fibers


def disintegrate(f, fiber_floor=FIBER_FLOOR):
    marginal = marginal_x(f)
    defined = marginal > fiber_floor
    fibers = np.full(f.values.shape, np.nan)
    fibers[defined] = f.values[defined] / marginal[defined, None]
    return FiberFamily(
        x_nodes=f.grid.x,
        v_nodes=f.grid.v,
        dv=f.grid.dv,
        marginal=marginal,
        fibers=fibers,
        defined=defined,
    )
