"""The stationary module contains the self-consistent Gibbs density and the
closed-form references of the linear (harmonic, K = 0) Kramers oscillator."""
import dataclasses

import numpy as np
from scipy import linalg
from scipy import optimize

from vfplab import functionals
from vfplab.density import PhaseDensity
from vfplab.errors import DomainError
from vfplab.errors import NonConvergenceError


@dataclasses.dataclass
class FixedPoint:
    density: PhaseDensity
    iterations: int
    residuals: list


def _gaussian_v_factor(grid, params):
    factor = np.exp(-0.5 * params.beta_m * grid.v ** 2)
    return factor / (np.sum(factor) * grid.dv)


def _boltzmann(exponent, dx):
    weights = np.exp(-(exponent - np.min(exponent)))
    return weights / (np.sum(weights) * dx)


def solve_gibbs(
    spec, params, grid, damping=0.5, tol=1e-10, max_iter=500, verbose=False
):
    """Damped Picard iteration for f = exp(-beta m h_f) / Z on a grid.

    The velocity factor is the exact Gaussian exp(-beta m v^2 / 2); only the
    x-marginal rho is iterated, rho <- (1 - damping) rho + damping T(rho) with
    T(rho) proportional to exp(-beta (U + K*rho)). The loop stops when the L1
    norm of the update falls below tol.
    """

    if not 0.0 < damping <= 1.0:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")

    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")

    x = grid.x
    dx = grid.dx
    beta = params.beta
    confinement = beta * spec.U.value(x[:, None])

    if spec.interaction_off:
        kernel = None
    else:
        kernel = spec.K.value((x[:, None] - x[None, :])[..., None]) * dx

    rho = _boltzmann(confinement, dx)
    residuals = []

    for iteration in range(1, max_iter + 1):
        exponent = confinement if kernel is None else confinement + beta * kernel @ rho
        update = (1.0 - damping) * rho + damping * _boltzmann(exponent, dx)
        residual = float(np.sum(np.abs(update - rho)) * dx)
        residuals.append(residual)
        rho = update

        if verbose:
            print(f"  iteration {iteration:4d}  L1 update = {residual:.3e}")

        if residual < tol:
            values = np.outer(rho, _gaussian_v_factor(grid, params))
            f_inf = PhaseDensity(grid, values, normalize=True)
            return FixedPoint(f_inf, iteration, residuals)

    raise NonConvergenceError(max_iter, residuals[-1])


def gibbs_fixed_point(
    spec, params, grid, damping=0.5, tol=1e-10, max_iter=500, verbose=False
):
    """Normalized self-consistent Gibbs density f_inf on the grid."""
    return solve_gibbs(spec, params, grid, damping, tol, max_iter, verbose).density


@dataclasses.dataclass(frozen=True)
class KramersReference:
    var_x: float
    var_v: float


def kramers_reference(params, kappa_U):
    """Stationary variances for U = kappa_U x^2 and K = 0."""
    if kappa_U <= 0.0:
        raise DomainError(f"kappa_U must be positive, got {kappa_U}")
    return KramersReference(
        var_x=1.0 / (2.0 * params.beta * kappa_U), var_v=1.0 / params.beta_m
    )


@dataclasses.dataclass
class KramersMoments:
    """E[X], E[V], E[X^2], E[XV], E[V^2] at each time (rows)."""

    times: np.ndarray
    values: np.ndarray

    @property
    def mean_x(self):
        return self.values[:, 0]

    @property
    def mean_v(self):
        return self.values[:, 1]

    @property
    def var_x(self):
        return self.values[:, 2] - self.values[:, 0] ** 2

    @property
    def cov_xv(self):
        return self.values[:, 3] - self.values[:, 0] * self.values[:, 1]

    @property
    def var_v(self):
        return self.values[:, 4] - self.values[:, 1] ** 2


def moment_generator(params, kappa_U):
    """Augmented 6x6 generator of the closed first/second moment system."""

    a = 2.0 * kappa_U / params.m
    b = params.gamma / params.m
    s2 = params.sigma ** 2

    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [-a, -b, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, -a, -b, 1.0, 0.0],
            [0.0, 0.0, 0.0, -2.0 * a, -2.0 * b, s2],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]
    )


def kramers_moments(params, kappa_U, mean0, cov0, times):
    """Exact moments of the harmonic Kramers oscillator from (mean0, cov0)."""

    mean0 = np.asarray(mean0, dtype=float)
    cov0 = np.asarray(cov0, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))

    state = np.array(
        [
            mean0[0],
            mean0[1],
            cov0[0, 0] + mean0[0] ** 2,
            cov0[0, 1] + mean0[0] * mean0[1],
            cov0[1, 1] + mean0[1] ** 2,
            1.0,
        ]
    )

    generator = moment_generator(params, kappa_U)
    values = np.array([linalg.expm(generator * t) @ state for t in times])

    return KramersMoments(times, values[:, :5])


def gaussian_trial(grid, params, var_x, center=0.0):
    """Product density N(center, var_x) x N(0, 1/(beta m)) on the grid."""
    var_v = 1.0 / params.beta_m

    def function(xx, vv):
        return np.exp(-0.5 * (xx - center) ** 2 / var_x - 0.5 * vv ** 2 / var_v)

    return PhaseDensity.from_function(grid, function)


def gaussian_trial_minimum(spec, params, grid, bracket=(0.1, 1.0, 4.0), center=0.0):
    """Minimize F over Gaussian trial densities by golden-section search on
    ln Var(X). Returns (var_x, F_min)."""

    def objective(log_var):
        trial = gaussian_trial(grid, params, np.exp(log_var), center)
        return functionals.free_energy(trial, spec, params)

    result = optimize.minimize_scalar(
        objective, bracket=tuple(np.log(bracket)), method="golden", tol=1e-10
    )

    return float(np.exp(result.x)), float(result.fun)
