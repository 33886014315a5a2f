"""The potentials module contains the confinement and interaction potentials.

Potentials act on arrays of positions with the spatial dimension as the last
axis: ``value`` maps (..., d) to (...), ``gradient`` to (..., d) and
``hessian`` to (..., d, d). The closed enumeration carries analytic
derivatives; tabulated potentials (d=1) are cubic splines built from a file
or from an expression in ``x``.
"""
import abc
import ast
import dataclasses
import warnings

import numpy as np
from asteval import Interpreter
from asteval import astutils
from scipy import interpolate
from scipy.spatial import distance

from vfplab import util
from vfplab.errors import ConfigError

EXACT_MEAN_FIELD_LIMIT = 20000
CHUNK = 256


class MeanFieldWarning(UserWarning):
    """Emitted when the exact pairwise mean field is asked for a large N."""


def _sq_norm(x):
    return np.sum(x * x, axis=-1)


class Potential(metaclass=abc.ABCMeta):
    """Smooth potential on R^d."""

    NAME = None
    PARAMETERS = {}

    @abc.abstractmethod
    def value(self, x):
        pass

    @abc.abstractmethod
    def gradient(self, x):
        pass

    @abc.abstractmethod
    def hessian(self, x):
        pass

    @property
    def is_zero(self):
        return False

    def mean_field(self, query, positions):
        """(1/N) sum_j grad(query - x_j) for every query point.

        query has shape (Q, d), positions (N, d); the result has shape (Q, d).
        """
        query = np.atleast_2d(query)
        positions = np.atleast_2d(positions)
        n_particles = len(positions)

        if n_particles > EXACT_MEAN_FIELD_LIMIT:
            warnings.warn(
                f"exact O(N^2) mean field with N = {n_particles}", MeanFieldWarning
            )

        result = np.empty_like(query, dtype=float)

        for start in range(0, len(query), CHUNK):
            block = query[start : start + CHUNK]
            grads = self.gradient(block[:, None, :] - positions[None, :, :])
            result[start : start + CHUNK] = _tree_mean(grads, axis=1)

        return result

    def convolve(self, query, positions):
        """(1/N) sum_j value(query - x_j) for every query point."""
        query = np.atleast_2d(query)
        positions = np.atleast_2d(positions)
        result = np.empty(len(query))

        for start in range(0, len(query), CHUNK):
            block = query[start : start + CHUNK]
            values = self.value(block[:, None, :] - positions[None, :, :])
            result[start : start + CHUNK] = _tree_mean(values, axis=1)

        return result

    def describe(self):
        items = ", ".join(
            f"{name}={getattr(self, name)}" for name in self.PARAMETERS
        )
        return f"{self.NAME}({items})"

    def __repr__(self):
        return self.describe()


def _tree_mean(values, axis):
    return util.pairwise_mean(values, axis=axis)


class Zero(Potential):
    NAME = "zero"

    def value(self, x):
        return np.zeros(np.shape(x)[:-1])

    def gradient(self, x):
        return np.zeros(np.shape(x))

    def hessian(self, x):
        shape = np.shape(x)
        return np.zeros(shape + shape[-1:])

    @property
    def is_zero(self):
        return True

    def mean_field(self, query, positions):
        return np.zeros(np.shape(np.atleast_2d(query)))

    def convolve(self, query, positions):
        return np.zeros(len(np.atleast_2d(query)))


class Quadratic(Potential):
    """kappa |x - center|^2."""

    NAME = "quadratic"
    PARAMETERS = {"kappa": {"type": float}, "center": {"type": float, "default": 0.0}}

    def __init__(self, kappa, center=0.0):
        self.kappa = float(kappa)
        self.center = float(center)

    def value(self, x):
        return self.kappa * _sq_norm(np.asarray(x) - self.center)

    def gradient(self, x):
        return 2.0 * self.kappa * (np.asarray(x) - self.center)

    def hessian(self, x):
        shape = np.shape(x)
        eye = np.eye(shape[-1])
        return np.broadcast_to(2.0 * self.kappa * eye, shape + shape[-1:]).copy()

    def mean_field(self, query, positions):
        # grad K is affine, so the empirical average only needs the mean.
        query = np.atleast_2d(query)
        mean = _tree_mean(np.atleast_2d(positions), axis=0)
        return 2.0 * self.kappa * (query - mean - self.center)

    def convolve(self, query, positions):
        query = np.atleast_2d(query) - self.center
        positions = np.atleast_2d(positions)
        mean = _tree_mean(positions, axis=0)
        second = _tree_mean(_sq_norm(positions), axis=0)
        return self.kappa * (_sq_norm(query) - 2.0 * query @ mean + second)


class QuarticDoubleWell(Potential):
    """a |x|^4 / 4 - b |x|^2 / 2 + b^2 / (4 a), nonnegative with minimum 0."""

    NAME = "quartic"
    PARAMETERS = {"a": {"type": float}, "b": {"type": float, "default": 0.0}}

    def __init__(self, a, b=0.0):
        if a <= 0.0:
            raise ConfigError(f"quartic potential needs a > 0, got {a}")
        self.a = float(a)
        self.b = float(b)

    def value(self, x):
        r2 = _sq_norm(np.asarray(x))
        return 0.25 * self.a * r2 ** 2 - 0.5 * self.b * r2 + self.b ** 2 / (4 * self.a)

    def gradient(self, x):
        x = np.asarray(x)
        r2 = _sq_norm(x)[..., None]
        return (self.a * r2 - self.b) * x

    def hessian(self, x):
        x = np.asarray(x)
        r2 = _sq_norm(x)[..., None, None]
        eye = np.eye(x.shape[-1])
        outer = x[..., :, None] * x[..., None, :]
        return (self.a * r2 - self.b) * eye + 2.0 * self.a * outer


class GaussianKernel(Potential):
    """amplitude * exp(-|x|^2 / (2 width^2))."""

    NAME = "gaussian"
    PARAMETERS = {"amplitude": {"type": float}, "width": {"type": float}}

    def __init__(self, amplitude, width):
        if width <= 0.0:
            raise ConfigError(f"gaussian kernel needs width > 0, got {width}")
        self.amplitude = float(amplitude)
        self.width = float(width)

    def value(self, x):
        return self.amplitude * np.exp(-0.5 * _sq_norm(np.asarray(x)) / self.width ** 2)

    def gradient(self, x):
        x = np.asarray(x)
        return -(self.value(x)[..., None] / self.width ** 2) * x

    def hessian(self, x):
        x = np.asarray(x)
        w2 = self.width ** 2
        eye = np.eye(x.shape[-1])
        outer = x[..., :, None] * x[..., None, :]
        return self.value(x)[..., None, None] * (outer / w2 ** 2 - eye / w2)


class Tabulated(Potential):
    """Cubic-spline potential on the real line (d=1)."""

    NAME = "tabulated"

    def __init__(self, nodes, values, label="tabulated"):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)

        if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 4:
            raise ConfigError("tabulated potential needs at least 4 (x, U) pairs")

        if np.any(np.diff(nodes) <= 0.0):
            raise ConfigError("tabulated potential nodes must be increasing")

        if not np.all(np.isfinite(values)):
            raise ConfigError("tabulated potential has non-finite values")

        self.label = label
        self.nodes = nodes
        self.spline = interpolate.CubicSpline(nodes, values, bc_type="natural")

    @classmethod
    def from_file(cls, filename):
        try:
            table = np.loadtxt(filename, delimiter=None, ndmin=2)
        except (OSError, ValueError) as error:
            raise ConfigError(f"cannot read potential table '{filename}': {error}")
        if table.shape[1] < 2:
            raise ConfigError(f"'{filename}' must have two columns: x, U")
        return cls(table[:, 0], table[:, 1], label=str(filename))

    @classmethod
    def from_expression(cls, expression, x_min=-10.0, x_max=10.0, points=2001):
        """Tabulate an expression in x (numpy functions allowed) with asteval."""

        aeval = Interpreter()

        try:
            names = astutils.get_ast_names(ast.parse(expression))
        except SyntaxError as error:
            raise ConfigError(f"invalid potential expression '{expression}': {error}")

        unknown = {name for name in names if name != "x"} - set(aeval.symtable)

        if unknown:
            raise ConfigError(
                "unknown name(s) in potential expression '{}': {}".format(
                    expression, ", ".join(sorted(unknown))
                )
            )

        nodes = np.linspace(x_min, x_max, points)
        aeval.symtable["x"] = nodes
        values = aeval(expression)

        if aeval.error:
            message = aeval.error[0].get_error()
            raise ConfigError(f"cannot evaluate '{expression}': {message[1]}")

        values = np.broadcast_to(np.asarray(values, dtype=float), nodes.shape)

        return cls(nodes, values, label=expression)

    def _scalar(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 1:
            raise ConfigError("tabulated potentials are one-dimensional")
        return x[..., 0]

    def value(self, x):
        return self.spline(self._scalar(x))

    def gradient(self, x):
        return self.spline(self._scalar(x), 1)[..., None]

    def hessian(self, x):
        return self.spline(self._scalar(x), 2)[..., None, None]

    def describe(self):
        return f"tabulated({self.label})"


POTENTIALS = {
    cls.NAME: cls for cls in (Zero, Quadratic, QuarticDoubleWell, GaussianKernel)
}


@dataclasses.dataclass(frozen=True)
class PotentialSpec:
    """Confinement U, interaction K and the quadratic-growth constant of U."""

    U: Potential
    K: Potential
    kappa_U: float = 0.0
    lipschitz_U: float = None
    lipschitz_K: float = None

    def __post_init__(self):
        if self.kappa_U < 0.0:
            raise ConfigError(f"kappa_U must be >= 0, got {self.kappa_U}")

    @property
    def interaction_off(self):
        return self.K.is_zero

    def force(self, x):
        """grad U at positions (..., d)."""
        return self.U.gradient(x)


@dataclasses.dataclass
class ValidationReport:
    symmetry: float
    oddness: float
    lower_bound: float
    lipschitz_grad_U: float
    lipschitz_grad_K: float
    hessian_bound_U: float
    hessian_bound_K: float
    n_probes: int
    tolerance: float = 1e-12

    def failures(self):
        checks = {
            "K symmetry": self.symmetry,
            "grad K oddness": self.oddness,
            "U quadratic lower bound": self.lower_bound,
        }
        return [name for name, value in checks.items() if value > self.tolerance]

    @property
    def passed(self):
        return not self.failures()


def validate_assumptions(spec, probe_grid, tolerance=1e-12):
    """Report worst-case violations of the standing assumptions on probes."""

    probes = np.asarray(probe_grid, dtype=float)

    if probes.ndim == 1:
        probes = probes[:, None]

    if probes.size == 0:
        raise ConfigError("validate_assumptions needs a nonempty probe grid")

    K, U = spec.K, spec.U

    symmetry = np.max(np.abs(K.value(probes) - K.value(-probes)))
    oddness = np.max(np.abs(K.gradient(-probes) + K.gradient(probes)))
    lower = np.max(spec.kappa_U * _sq_norm(probes) - U.value(probes))

    return ValidationReport(
        symmetry=float(symmetry),
        oddness=float(oddness),
        lower_bound=float(max(lower, 0.0)),
        lipschitz_grad_U=_lipschitz(U.gradient(probes), probes),
        lipschitz_grad_K=_lipschitz(K.gradient(probes), probes),
        hessian_bound_U=_hessian_bound(U.hessian(probes)),
        hessian_bound_K=_hessian_bound(K.hessian(probes)),
        n_probes=len(probes),
        tolerance=tolerance,
    )


def _lipschitz(values, probes):
    if len(probes) < 2:
        return 0.0
    steps = distance.pdist(probes)
    jumps = distance.pdist(values.reshape(len(probes), -1))
    mask = steps > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(jumps[mask] / steps[mask]))


def _hessian_bound(hessians):
    return float(np.max(np.linalg.norm(hessians, ord=2, axis=(-2, -1))))


def build_potential(details, section="potential"):
    """Create a potential from a checked config section (dict of values)."""

    kind = details.get("kind", "zero")

    if kind == "tabulated":
        if "file" not in details:
            raise ConfigError(f"[{section}] kind = tabulated needs 'file'")
        return Tabulated.from_file(details["file"])

    if kind == "expression":
        if "expression" not in details:
            raise ConfigError(f"[{section}] kind = expression needs 'expression'")
        return Tabulated.from_expression(
            details["expression"],
            x_min=float(details.get("x_min", -10.0)),
            x_max=float(details.get("x_max", 10.0)),
            points=int(details.get("points", 2001)),
        )

    if kind not in POTENTIALS:
        choices = sorted(set(POTENTIALS) | {"tabulated", "expression"})
        raise ConfigError(
            f"[{section}] unknown potential kind '{kind}', choose from {choices}"
        )

    cls = POTENTIALS[kind]
    kwargs = {}

    for name, item in cls.PARAMETERS.items():
        if name in details:
            try:
                kwargs[name] = item["type"](details[name])
            except ValueError:
                raise ConfigError(
                    f"[{section}] {name} = '{details[name]}' is not a valid "
                    f"{item['type'].__name__}"
                )
        elif "default" not in item:
            raise ConfigError(f"[{section}] {kind} potential needs '{name}'")

    return cls(**kwargs)
