"""The fitting module contains the least-squares fits used by the checks.

Fits are run with lmfit: the exponential decay of the mean velocity of a
particle run and the algebraic convergence order of a discretization error.
"""
import dataclasses

import lmfit
import numpy as np

from vfplab.errors import DomainError


@dataclasses.dataclass
class DecayFit:
    rate: float
    stderr: float
    amplitude: float
    result: object

    def relative_error(self, expected):
        return abs(self.rate - expected) / abs(expected)


def _residuals_decay(params, times, values):
    amplitude = params["amplitude"].value
    rate = params["rate"].value
    return values - amplitude * np.exp(-rate * times)


def fit_momentum_decay(times, mean_velocity, rate_guess=1.0):
    """Fit mean(v)(t) = A exp(-r t); r estimates gamma / m."""

    times = np.asarray(times, dtype=float)
    values = np.ravel(np.asarray(mean_velocity, dtype=float))

    if len(times) != len(values) or len(times) < 3:
        raise DomainError("the decay fit needs at least three (t, mean v) points")

    params = lmfit.Parameters()
    params.add("amplitude", value=values[0] if values[0] != 0.0 else 1.0)
    params.add("rate", value=rate_guess, min=0.0)

    minimizer = lmfit.Minimizer(_residuals_decay, params, fcn_args=(times, values))
    result = minimizer.minimize(method="leastsq")

    rate = result.params["rate"]
    stderr = rate.stderr if rate.stderr is not None else np.nan

    return DecayFit(rate.value, stderr, result.params["amplitude"].value, result)


def _residuals_order(params, log_h, log_error):
    return log_error - (params["log_c"].value + params["order"].value * log_h)


def fit_convergence_order(spacings, errors):
    """Fit error = C h^p on a log-log scale; returns (p, stderr)."""

    spacings = np.asarray(spacings, dtype=float)
    errors = np.asarray(errors, dtype=float)

    if np.any(spacings <= 0.0) or np.any(errors <= 0.0):
        raise DomainError("convergence fits need positive spacings and errors")

    params = lmfit.Parameters()
    params.add("log_c", value=0.0)
    params.add("order", value=2.0)

    minimizer = lmfit.Minimizer(
        _residuals_order, params, fcn_args=(np.log(spacings), np.log(errors))
    )
    result = minimizer.minimize(method="leastsq")
    order = result.params["order"]

    return order.value, order.stderr if order.stderr is not None else np.nan


def write_statistics(result, path, name="statistics.fit"):
    """Write fitting statistics to a file."""

    filename = path / name

    with open(filename, "w") as f:
        f.write(f"# Number of data points: {result.ndata}\n")
        f.write(f"# Number of variables: {result.nvarys}\n")
        f.write(f"# Fitting method: {result.method}\n")
        f.write(f"# Number of function evaluations: {result.nfev}\n\n")
        f.write(f"chi-square         = {result.chisqr: .5e}\n")
        f.write(f"reduced chi-square = {result.redchi: .5e}\n")
        f.write(f"Akaike Information Criterion   = {result.aic: .5e}\n")
        f.write(f"Bayesian Information Criterion = {result.bic: .5e}\n\n")
        for param in result.params.values():
            stderr = param.stderr if param.stderr is not None else np.nan
            f.write(f"{param.name:<18s} = {param.value: .5e} +/- {stderr:.5e}\n")

    return filename
