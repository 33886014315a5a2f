"""The generic module contains the reversible/irreversible decomposition of
the kinetic equation as grid operators.

The Poisson operator acts through the canonical bracket, discretized so that
it stays antisymmetric in the grid pairing; the kinetic transport term uses
the same bracket. The Onsager operator J(u) psi = -div(J u grad psi)
is discretized in flux form on cell faces, with a face mobility that is the
logarithmic (default) or arithmetic mean of the neighbouring cell values.
With the logarithmic mean the flux of ln u + beta m v^2/2 vanishes exactly on
discrete Gibbs columns.

The velocity drift-diffusion ("Onsager-only") evolution is solved by an
exponentially fitted (Scharfetter-Gummel) scheme, implicit in v, which keeps
the discrete Gibbs profile exp(-beta m v^2/2) fixed and every x-column mass
unchanged.
"""
import numpy as np
from scipy import linalg
from scipy import special

from vfplab import functionals
from vfplab.density import PhaseDensity
from vfplab.errors import ConfigError
from vfplab.errors import DomainError
from vfplab.stencils import Stencil

LOG_FLOOR = 1e-300
MOBILITIES = ("logarithmic", "arithmetic")


def _values(obj):
    if isinstance(obj, PhaseDensity):
        return obj.values
    return np.asarray(obj, dtype=float)


def poisson_bracket(a, b, grid=None, accuracy=6):
    """{a, b} = d_x a d_v b - d_v a d_x b on a common grid.

    The bracket is the mean of the three equivalent Jacobian forms

      d_x a d_v b - d_v a d_x b
      d_x(a d_v b) - d_v(a d_x b)
      d_v(b d_x a) - d_x(b d_v a)

    on skew-symmetric centred stencils (fields are zero outside the grid),
    so that sum(c {a, b}) = -sum(b {a, c}) holds to rounding.
    """

    if grid is None:
        grid = getattr(a, "grid", None) or getattr(b, "grid", None)

    if grid is None:
        raise DomainError("poisson_bracket needs a grid for plain arrays")

    a, b = _values(a), _values(b)

    if a.shape != grid.shape or b.shape != grid.shape:
        raise DomainError(f"fields {a.shape}, {b.shape} are not on grid {grid.shape}")

    stencil = Stencil(grid, accuracy, boundary="zero")
    d_x, d_v = stencil.d_x, stencil.d_v
    a_x, a_v, b_x, b_v = d_x(a), d_v(a), d_x(b), d_v(b)

    products = a_x * b_v - a_v * b_x
    a_fluxes = d_x(a * b_v) - d_v(a * b_x)
    b_fluxes = d_v(b * a_x) - d_x(b * a_v)

    return (products + (a_fluxes + b_fluxes)) / 3.0


def poisson_apply(f, phi, accuracy=6):
    """L(f) phi = -{f, phi}."""
    return -poisson_bracket(f, phi, f.grid, accuracy)


def default_onsager_matrix(params):
    """J = A/2 = diag(0, sigma^2/2) for d = 1."""
    return np.diag([0.0, params.diffusion])


def check_onsager_matrix(J):
    J = np.asarray(J, dtype=float)

    if J.shape != (2, 2):
        raise ConfigError(f"J must be a 2x2 matrix for d = 1, got shape {J.shape}")

    if not np.allclose(J, J.T, rtol=0.0, atol=1e-14):
        raise ConfigError("J must be symmetric")

    eigenvalues = np.linalg.eigvalsh(J)

    if eigenvalues.min() < -1e-14 * max(1.0, np.abs(eigenvalues).max()):
        raise ConfigError(
            "J must be positive semidefinite, smallest eigenvalue "
            f"{eigenvalues.min():.3e}"
        )

    if J[0, 1] != 0.0:
        raise ConfigError("only diagonal Onsager matrices are supported")

    return J


def logarithmic_mean(a, b):
    """(a - b) / (ln a - ln b), with L(a, a) = a and 0 when either is 0."""

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = a + b
    x = np.divide(a - b, total, out=np.zeros_like(total), where=total > 0.0)
    small = np.abs(x) < 1e-4

    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(small, 0.5, x)
        ratio = np.where(
            small, 1.0 - x ** 2 / 3.0 - 4.0 * x ** 4 / 45.0, safe / np.arctanh(safe)
        )

    return np.where((a > 0.0) & (b > 0.0), 0.5 * total * ratio, 0.0)


def face_mobility(values, axis, kind="logarithmic"):
    """Mean of neighbouring cells along an axis (n - 1 faces)."""

    lower = np.take(values, np.arange(values.shape[axis] - 1), axis=axis)
    upper = np.take(values, np.arange(1, values.shape[axis]), axis=axis)

    if kind == "logarithmic":
        return logarithmic_mean(lower, upper)

    if kind == "arithmetic":
        return 0.5 * (lower + upper)

    raise ConfigError(f"unknown face mobility '{kind}', choose from {MOBILITIES}")


def _spacing(grid, axis):
    return grid.dx if axis == 0 else grid.dv


def _face_fluxes(u, psi, J, mobility):
    values = _values(u)
    for axis in (0, 1):
        coefficient = J[axis, axis]
        if coefficient == 0.0:
            continue
        spacing = _spacing(u.grid, axis)
        mobility_face = face_mobility(values, axis, mobility)
        gradient = np.diff(psi, axis=axis) / spacing
        yield axis, spacing, coefficient * mobility_face * gradient, gradient


def onsager_apply(u, psi, J=None, params=None, mobility="logarithmic"):
    """J(u) psi = -div(J u grad psi) with zero flux through the grid boundary."""

    if J is None:
        if params is None:
            raise DomainError("onsager_apply needs J or params for the default J")
        J = default_onsager_matrix(params)

    J = check_onsager_matrix(J)
    psi = _values(psi)
    result = np.zeros(u.grid.shape)

    for axis, spacing, flux, _ in _face_fluxes(u, psi, J, mobility):
        width = [(0, 0), (0, 0)]
        width[axis] = (1, 1)
        padded = np.pad(flux, width)
        result -= np.diff(padded, axis=axis) / spacing

    return result


def onsager_form(u, psi, J=None, params=None, mobility="logarithmic"):
    """int psi J(u) psi, summed face by face (always >= 0)."""

    if J is None:
        J = default_onsager_matrix(params)

    J = check_onsager_matrix(J)
    total = 0.0

    for _, _, flux, gradient in _face_fluxes(u, _values(psi), J, mobility):
        total += float(np.sum(flux * gradient))

    return total * u.grid.cell_area


def free_energy_variation(f, spec, params):
    """ln f + beta m h_f (the constant 1 of dF/df is annihilated by J)."""
    h = functionals.h_field(f, spec, params, weight=1.0)
    log_f = np.log(np.maximum(f.values, LOG_FLOOR))
    return log_f + params.beta_m * h


def assemble_generic_rhs(f, spec, params, accuracy=6, mobility="logarithmic"):
    """L(f) h_f - J(f)(ln f + beta m h_f).

    With J(u) psi = -div(J u grad psi) positive semidefinite, the dissipative
    part enters with a minus sign: it is div(A/2 f grad(ln f + beta m h_f)).
    """
    h = functionals.h_field(f, spec, params, weight=1.0)
    reversible = poisson_apply(f, h, accuracy)
    dissipative = onsager_apply(
        f, free_energy_variation(f, spec, params), params=params, mobility=mobility
    )
    return reversible - dissipative


def bernoulli(z):
    """z / (exp(z) - 1) with B(0) = 1."""
    return 1.0 / special.exprel(z)


def drift_diffusion_banded(grid, params, dt, theta, diffusion=None):
    """Banded (I - theta dt L) and the tridiagonal L of the velocity
    drift-diffusion d_v(D (d_v f + beta m v f)) with zero-flux ends."""

    D = params.diffusion if diffusion is None else diffusion
    psi = 0.5 * params.beta_m * grid.v ** 2
    delta = np.diff(psi)
    c = D / grid.dv ** 2

    upper = c * bernoulli(-delta)
    lower = c * bernoulli(delta)
    diagonal = np.zeros(grid.nv)
    diagonal[:-1] -= lower
    diagonal[1:] -= upper

    operator = np.zeros((3, grid.nv))
    operator[0, 1:] = upper
    operator[1, :] = diagonal
    operator[2, :-1] = lower

    system = -theta * dt * operator
    system[1, :] += 1.0

    return system, operator


def _apply_banded(operator, columns):
    result = operator[1][:, None] * columns
    result[:-1] += operator[0, 1:][:, None] * columns[1:]
    result[1:] += operator[2, :-1][:, None] * columns[:-1]
    return result


def drift_diffusion_step(values, grid, params, dt, theta=0.5, diffusion=None):
    """One theta-step (0.5 Crank-Nicolson, 1 implicit Euler) of the velocity
    drift-diffusion for every x-column of a (nx, nv) array."""

    if not 0.5 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0.5, 1], got {theta}")

    system, operator = drift_diffusion_banded(grid, params, dt, theta, diffusion)
    columns = np.asarray(values, dtype=float).T

    if theta < 1.0:
        columns = columns + (1.0 - theta) * dt * _apply_banded(operator, columns)

    return linalg.solve_banded((1, 1), system, columns).T


def onsager_flow(u, params, dt, n_steps, theta=0.5, record_every=1):
    """Onsager-only evolution d_t u = -J(u)(ln u + beta m h), J = A/2.

    Returns the list of densities at steps 0, record_every, ...; every
    x-marginal is left unchanged.
    """

    if dt <= 0.0 or n_steps < 0:
        raise DomainError(f"need dt > 0 and n_steps >= 0, got {dt}, {n_steps}")

    values = u.values
    snapshots = [u]

    for k in range(1, n_steps + 1):
        values = drift_diffusion_step(values, u.grid, params, dt, theta)
        if k % record_every == 0:
            snapshots.append(PhaseDensity(u.grid, np.maximum(values, 0.0)))

    return snapshots


def metric_slope(u, params, M=None, mobility="logarithmic"):
    """sqrt of the dissipation in the J = diag(0, M) metric (M = sigma^2/2
    by default), from the discrete Onsager quadratic form."""

    M = params.diffusion if M is None else M
    J = np.diag([0.0, M])
    log_u = np.log(np.maximum(u.values, LOG_FLOOR))
    psi = log_u + 0.5 * params.beta_m * u.grid.v[None, :] ** 2
    return float(np.sqrt(max(onsager_form(u, psi, J, mobility=mobility), 0.0)))


def generic_residuals(f, spec, params, n_fields=3, seed=0, accuracy=6):
    """Structural residuals on random smooth fields with Gaussian envelopes:
    Poisson antisymmetry |int psi L(f) phi + phi L(f) psi|, Onsager symmetry
    and the most negative Onsager quadratic form."""

    rng = np.random.default_rng(seed)
    grid = f.grid
    xx, vv = grid.mesh()
    sx = 0.5 * (grid.x_max - grid.x_min)
    sv = 0.5 * (grid.v_max - grid.v_min)
    cx = 0.5 * (grid.x_max + grid.x_min)
    cv = 0.5 * (grid.v_max + grid.v_min)
    envelope = np.exp(-8.0 * (((xx - cx) / sx) ** 2 + ((vv - cv) / sv) ** 2))

    def smooth_field():
        a, b, c, d = rng.normal(size=4)
        return envelope * np.sin(a * xx / sx + b) * np.cos(c * vv / sv + d)

    antisymmetry = symmetry = 0.0
    positivity = np.inf

    for _ in range(n_fields):
        phi, psi = smooth_field(), smooth_field()
        l_phi = poisson_apply(f, phi, accuracy)
        l_psi = poisson_apply(f, psi, accuracy)
        pairing = grid.cell_area * np.sum(psi * l_phi + phi * l_psi)
        antisymmetry = max(antisymmetry, abs(pairing))
        j_phi = onsager_apply(f, phi, params=params)
        j_psi = onsager_apply(f, psi, params=params)
        symmetry = max(
            symmetry, abs(f.grid.cell_area * np.sum(phi * j_psi - psi * j_phi))
        )
        positivity = min(positivity, f.grid.cell_area * np.sum(psi * j_psi))

    return {
        "poisson_antisymmetry": float(antisymmetry),
        "onsager_symmetry": float(symmetry),
        "onsager_min_form": float(positivity),
    }

