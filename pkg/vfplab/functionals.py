"""The functionals module contains the energy functionals, the energy process
and the trajectorial rates of free-energy dissipation.

Grid functionals act on a one-dimensional PhaseDensity and use midpoint
quadrature. Point-wise quantities (theta, the rates D and D~) are evaluated
at batches of phase points with bicubic interpolation of the derivative
fields of ln f. The law entering h_f through K*f can be given either as a
PhaseDensity (grid quadrature over its x-marginal) or as a
ParticleEnsemble (empirical average, diagonal included).
"""
import dataclasses

import numpy as np
from scipy import special

from vfplab import density
from vfplab import hamiltonian
from vfplab import util
from vfplab.ensemble import ParticleEnsemble
from vfplab.ensemble import PhasePoint
from vfplab.errors import DomainError
from vfplab.errors import StateError

VARIANTS = ("own_velocity", "copy_velocity")
DEFAULT_VARIANT = "own_velocity"
QUADRATURE_CHUNK = 4096


@dataclasses.dataclass
class EnergyReport:
    t: float
    F: float
    H: float
    I: float
    entropy: float

    def __post_init__(self):
        if self.I < 0.0:
            raise DomainError(f"negative dissipation {self.I:.3e}")

    def as_row(self):
        return [self.t, self.F, self.H, self.I, self.entropy]


@dataclasses.dataclass
class TrajectorialRateSample:
    particle_id: int
    theta: float
    D: float
    variant: str = DEFAULT_VARIANT

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.D)):
            raise DomainError(f"non-finite rate sample for particle {self.particle_id}")
        _check_variant(self.variant)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise DomainError(f"unknown interaction variant '{variant}', use {VARIANTS}")


def _as_point(z):
    if isinstance(z, PhasePoint):
        return z
    if isinstance(z, ParticleEnsemble):
        return z.particles
    return PhasePoint.from_array(z)


def _columns(z):
    z = _as_point(z)
    dim = z.x.shape[-1]
    return z.x.reshape(-1, dim), z.v.reshape(-1, dim), z.batched


def _unbatch(values, batched):
    return values if batched else values[0]


# Interaction fields --------------------------------------------------------


def _law_positions(source):
    if isinstance(source, ParticleEnsemble):
        return source.positions
    return None


def interaction_value(source, spec, x):
    """(K*f)(x) at positions x of shape (n, d)."""

    x = np.atleast_2d(x)

    if spec.interaction_off:
        return np.zeros(len(x))

    if source is None:
        raise StateError("an interacting h_f needs the law f (density or ensemble)")

    positions = _law_positions(source)

    if positions is not None:
        return spec.K.convolve(x, positions)

    grid = source.grid
    weights = marginal_weights(source)
    nodes = grid.x[:, None]
    result = np.empty(len(x))

    for start in range(0, len(x), QUADRATURE_CHUNK):
        block = x[start : start + QUADRATURE_CHUNK]
        kernel = spec.K.value(block[:, None, :] - nodes[None, :, :])
        result[start : start + QUADRATURE_CHUNK] = kernel @ weights

    return result


def interaction_gradient(source, spec, x):
    """grad(K*f)(x) at positions x of shape (n, d)."""

    x = np.atleast_2d(x)

    if spec.interaction_off:
        return np.zeros_like(x, dtype=float)

    if source is None:
        raise StateError("an interacting h_f needs the law f (density or ensemble)")

    positions = _law_positions(source)

    if positions is not None:
        return spec.K.mean_field(x, positions)

    grid = source.grid
    weights = marginal_weights(source)
    nodes = grid.x[:, None]
    result = np.empty_like(x, dtype=float)

    for start in range(0, len(x), QUADRATURE_CHUNK):
        block = x[start : start + QUADRATURE_CHUNK]
        grads = spec.K.gradient(block[:, None, :] - nodes[None, :, :])
        result[start : start + QUADRATURE_CHUNK] = np.einsum(
            "qkd,k->qd", grads, weights
        )

    return result


def marginal_weights(f):
    """Quadrature weights rho(x_k) dx of the x-marginal."""
    return density.marginal_x(f) * f.grid.dx


# Energies -----------------------------------------------------------------


def _h(f, z, spec, params, weight):
    x, v, batched = _columns(z)
    m = params.m
    value = (
        0.5 * np.sum(v ** 2, axis=1)
        + spec.U.value(x) / m
        + weight * interaction_value(f, spec, x) / m
    )
    return _unbatch(value, batched)


def h_check(f, z, spec, params):
    """h-check_f(z) = v^2/2 + U(x)/m + (K*f)(x)/(2m)."""
    return _h(f, z, spec, params, 0.5)


def h_full(f, z, spec, params):
    """h_f(z) = v^2/2 + U(x)/m + (K*f)(x)/m."""
    return _h(f, z, spec, params, 1.0)


def h_field(f, spec, params, weight=0.5, source=None):
    """h on the grid of f; weight 1/2 gives h-check, 1 gives h_f.

    source is the law entering K*source (f itself by default).
    """
    source = f if source is None else source
    grid = f.grid
    x = grid.x[:, None]
    m = params.m
    along_x = spec.U.value(x) / m + weight * interaction_value(source, spec, x) / m
    return along_x[:, None] + 0.5 * grid.v[None, :] ** 2


def entropy(f):
    """int f ln f with 0 ln 0 = 0."""
    return float(np.sum(special.xlogy(f.values, f.values)) * f.grid.cell_area)


def conservative_energy(f, spec, params):
    """H_f = int f h-check_f."""
    return f.integrate(h_field(f, spec, params, 0.5))


def free_energy(f, spec, params):
    """F(f) = int f ln f + beta m f h-check_f."""
    return entropy(f) + params.beta_m * conservative_energy(f, spec, params)


def dissipation_I(f, spec, params, floor_eps=density.FLOOR_EPS, accuracy=2):
    """I(f) = (sigma^2/2) int |d_v ln f + beta m v|^2 f."""
    fields = density.log_derivatives(f, floor_eps=floor_eps, accuracy=accuracy)
    residual = fields.grad_v_log_f + params.beta_m * f.grid.v[None, :]
    return params.diffusion * f.integrate(residual ** 2)


def energy_report(f, spec, params, t=0.0, floor_eps=density.FLOOR_EPS, accuracy=2):
    S = entropy(f)
    H = conservative_energy(f, spec, params)
    return EnergyReport(
        t=float(t),
        F=S + params.beta_m * H,
        H=H,
        I=dissipation_I(f, spec, params, floor_eps, accuracy),
        entropy=S,
    )


# Log-density fields at arbitrary points -----------------------------------


class LogFields:
    """Interpolated ln f, its gradient and Hessian (d = 1)."""

    def __init__(self, f, floor_eps=density.FLOOR_EPS, accuracy=2):
        self.grid = f.grid
        derivatives = density.log_hessian(f, floor_eps=floor_eps, accuracy=accuracy)
        log_f = density.floored_log(f.values, floor_eps)
        self._log = density.GridInterpolator(f.grid, log_f)
        self._grad = [density.GridInterpolator(f.grid, g) for g in derivatives.grad]
        self._hess = [
            [density.GridInterpolator(f.grid, row[b]) for b in (0, 1)]
            for row in derivatives.hessian
        ]

    def log(self, x, v):
        return self._log(x, v)

    def grad(self, x, v):
        """Shape (n, 2): d/dx, d/dv."""
        return np.stack([g(x, v) for g in self._grad], axis=-1)

    def hessian(self, x, v):
        """Shape (n, 2, 2)."""
        return np.stack(
            [np.stack([h(x, v) for h in row], axis=-1) for row in self._hess], axis=-2
        )


def _one_dimensional(x, v):
    if x.shape[1] != 1:
        raise DomainError("grid-based point evaluations require d = 1")
    return x[:, 0], v[:, 0]


def energy_process_theta(z, f, spec, params, floor_eps=density.FLOOR_EPS, fields=None):
    """theta(z, f) = ln f(z) + beta m h-check_f(z)."""
    x, v, batched = _columns(z)
    fields = LogFields(f, floor_eps) if fields is None else fields
    log_f = fields.log(*_one_dimensional(x, v))
    theta = log_f + params.beta_m * h_check(f, PhasePoint(x, v), spec, params)
    return _unbatch(theta, batched)


def _interaction_term(x, v, spec, params, ensemble, variant):
    """(beta/2) (1/N) sum_j <grad K(x - x_j), w> with w = v or w = v_j."""

    if spec.interaction_off:
        return np.zeros(len(x))

    if ensemble is None:
        raise StateError("the interaction expectation needs the particle ensemble")

    if variant == "own_velocity":
        field = spec.K.mean_field(x, ensemble.positions)
        return 0.5 * params.beta * np.sum(field * v, axis=1)

    result = np.empty(len(x))
    positions, velocities = ensemble.positions, ensemble.velocities

    for start in range(0, len(x), 256):
        block = x[start : start + 256]
        grads = spec.K.gradient(block[:, None, :] - positions[None, :, :])
        pairs = np.sum(grads * velocities[None, :, :], axis=-1)
        result[start : start + 256] = util.pairwise_mean(pairs, axis=1)

    return 0.5 * params.beta * result


def trajectorial_rate_D(
    z,
    f,
    spec,
    params,
    ensemble=None,
    variant=DEFAULT_VARIANT,
    floor_eps=density.FLOOR_EPS,
    fields=None,
):
    """Trajectorial rate of free-energy dissipation in original coordinates.

    D = 2d gamma/m + (sigma^2/2f) Lap_v f - beta gamma |v|^2
        + (sigma^2/2) Lap_v ln f - (beta/2) <grad K*f(x), v> + interaction term

    grad K*f is the empirical mean field of the ensemble when one is given,
    so both interaction contributions are built from the same law.
    """

    _check_variant(variant)
    x, v, batched = _columns(z)
    xs, vs = _one_dimensional(x, v)
    fields = LogFields(f, floor_eps) if fields is None else fields

    grad_v = fields.grad(xs, vs)[:, 1]
    lap_v = fields.hessian(xs, vs)[:, 1, 1]
    lap_f_over_f = lap_v + grad_v ** 2

    dim = x.shape[1]
    rate = (
        2.0 * dim * params.gamma / params.m
        + params.diffusion * lap_f_over_f
        - params.beta * params.gamma * np.sum(v ** 2, axis=1)
        + params.diffusion * lap_v
    )

    if not spec.interaction_off:
        source = f if ensemble is None else ensemble
        field = interaction_gradient(source, spec, x)
        rate -= 0.5 * params.beta * np.sum(field * v, axis=1)
        rate += _interaction_term(x, v, spec, params, ensemble, variant)

    return _unbatch(rate, batched)


def rate_samples(
    ensemble, f, spec, params, variant=DEFAULT_VARIANT, floor_eps=density.FLOOR_EPS
):
    """TrajectorialRateSample for every particle of the ensemble."""
    fields = LogFields(f, floor_eps)
    points = ensemble.particles
    theta = energy_process_theta(points, f, spec, params, fields=fields)
    rates = trajectorial_rate_D(
        points, f, spec, params, ensemble, variant, fields=fields
    )
    return [
        TrajectorialRateSample(int(i), float(th), float(d), variant)
        for i, th, d in zip(ensemble.stream_ids, theta, rates)
    ]


def mean_rate(ensemble, f, spec, params, variant=DEFAULT_VARIANT, fields=None):
    rates = trajectorial_rate_D(
        ensemble.particles, f, spec, params, ensemble, variant, fields=fields
    )
    return float(util.pairwise_mean(rates))


def arbitrate_variant(ensemble, f, spec, params, reference):
    """Pick the interaction variant whose ensemble mean of D is closest to
    the reference rate (typically -I(f) or a finite-difference dF/dt).

    Returns (variant, {variant: mean}).
    """
    fields = LogFields(f)
    means = {
        variant: mean_rate(ensemble, f, spec, params, variant, fields)
        for variant in VARIANTS
    }
    best = min(VARIANTS, key=lambda name: abs(means[name] - reference))
    return best, means


# Pulled-back functionals --------------------------------------------------


def _flow_time(flow, t):
    if t is None:
        return flow.target_time
    if abs(t - flow.target_time) > 1e-12:
        raise DomainError(
            f"flow realizes Phi_{flow.target_time:g}, asked for t = {t:g}"
        )
    return t


def theta_tilde(z_tilde, u, flow, f, spec, params, fields=None):
    """theta~(z~) = ln u(z~) + beta m h-check_f(Phi_t(z~))."""
    x, v, batched = _columns(z_tilde)
    fields = LogFields(u) if fields is None else fields
    image = flow.phi(PhasePoint(x, v))
    value = fields.log(*_one_dimensional(x, v)) + params.beta_m * h_check(
        f, image, spec, params
    )
    return _unbatch(value, batched)


def pulled_back_free_energy(
    u, flow, f_for_h, spec, params, t=None, method="grid", samples=None
):
    """F~_t(u) = int u ln u + beta m u h-check_{f_t}(Phi_t(z~)).

    method "grid" flows the cell centres of u; method "samples" averages
    theta~ over pulled-back samples.
    """

    _flow_time(flow, t)

    if method == "grid":
        xx, vv = u.grid.mesh()
        image = flow.phi(PhasePoint(xx.reshape(-1, 1), vv.reshape(-1, 1)))
        h = h_check(f_for_h, image, spec, params).reshape(u.grid.shape)
        return entropy(u) + params.beta_m * u.integrate(h)

    if method == "samples":
        if samples is None:
            raise StateError("method 'samples' needs the pulled-back samples")
        values = theta_tilde(_as_point(samples), u, flow, f_for_h, spec, params)
        return float(util.pairwise_mean(values))

    raise DomainError(f"unknown evaluation method '{method}'")


def _pulled_back_integrand(grad_log_u, jacobian, velocity, params):
    # (grad ln u . DPhi_t^{-1})_v + beta m V, where DPhi_t^{-1} = DPhi_{-t}(Phi_t).
    inverse = np.linalg.inv(jacobian)
    pulled = np.einsum("na,nab->nb", grad_log_u, inverse)
    residual = pulled[:, 1] + params.beta_m * velocity[:, 0]
    return params.diffusion * residual ** 2


def pulled_back_dissipation(
    u, flow, spec, params, t=None, method="grid", samples=None, accuracy=2
):
    """I~(u) = (1/2) int |grad(ln u + beta m h-check o Phi_t) DPhi_{-t} G|^2 u.

    grad(h-check o Phi_t) DPhi_{-t} is grad h-check at Phi_t(z~), whose
    velocity component is the velocity of Phi_t(z~).
    """

    _flow_time(flow, t)

    if method == "grid":
        xx, vv = u.grid.mesh()
        points = PhasePoint(xx.reshape(-1, 1), vv.reshape(-1, 1))
        image, jacobian = flow.jacobian_at(points)
        derivatives = density.log_hessian(u, accuracy=accuracy)
        grad = derivatives.grad.reshape(2, -1).T
        integrand = _pulled_back_integrand(grad, jacobian, image.v, params)
        return u.integrate(integrand.reshape(u.grid.shape))

    if method == "samples":
        if samples is None:
            raise StateError("method 'samples' needs the pulled-back samples")
        x, v, _ = _columns(samples)
        fields = LogFields(u, accuracy=accuracy)
        image, jacobian = flow.jacobian_at(PhasePoint(x, v))
        grad = fields.grad(*_one_dimensional(x, v))
        integrand = _pulled_back_integrand(grad, jacobian, image.v, params)
        return float(util.pairwise_mean(integrand))

    raise DomainError(f"unknown evaluation method '{method}'")


def _grad_h_check(source, spec, params, x, v, t, history):
    """grad h-check_{f_t} at (x, v): ((grad U + grad K*f_t / 2)/m, v)."""
    force = spec.U.gradient(x)
    if not spec.interaction_off:
        if history is not None and history.interaction_on:
            field = history.force(t, x)
        else:
            field = interaction_gradient(source, spec, x)
        force = force + 0.5 * field
    return np.concatenate([force / params.m, v], axis=1)


def _b_H(source, spec, params, x, v, t, history):
    force = spec.U.gradient(x)
    if not spec.interaction_off:
        if history is not None and history.interaction_on:
            force = force + history.force(t, x)
        else:
            force = force + interaction_gradient(source, spec, x)
    return np.concatenate([v, -force / params.m], axis=1)


def trajectorial_rate_D_tilde(
    z_tilde,
    u,
    flow,
    f,
    spec,
    params,
    ensemble=None,
    variant=DEFAULT_VARIANT,
    fd_eps=1e-4,
    fields=None,
):
    """Trajectorial rate of the pulled-back free energy at z~.

    With Z = Phi_t(z~), A~ = DPhi_{-t}(Z) A DPhi_{-t}(Z)^T and
    g = h-check_{f_t} o Phi_t:

    D~ = (1/2) grad theta~ . (div A~ + A~ grad ln u - beta m A~ grad g + Gamma(Z))
         + tr(A~ Hess theta~) + beta m grad h-check(Z) . b_H(Z) + interaction term

    Hess g and div A~ are central differences over base points shifted by
    +/- fd_eps along each phase-space axis.
    """

    _check_variant(variant)
    x, v, batched = _columns(z_tilde)
    xs, vs = _one_dimensional(x, v)
    fields = LogFields(u) if fields is None else fields

    t = flow.target_time
    history = flow.flow.history
    source = f if f is not None else ensemble
    A = params.noise_matrix

    def pulled(points_x, points_v):
        image, jacobian = flow.jacobian_at(PhasePoint(points_x, points_v))
        inverse = np.linalg.inv(jacobian)
        a_tilde = np.einsum("nab,bc,ndc->nad", inverse, A, inverse)
        grad_h = _grad_h_check(source, spec, params, image.x, image.v, t, history)
        grad_g = np.einsum("nab,na->nb", jacobian, grad_h)
        return image, a_tilde, grad_h, grad_g

    image, a_tilde, grad_h, grad_g = pulled(x, v)

    n = len(x)
    hess_g = np.zeros((n, 2, 2))
    div_a = np.zeros((n, 2))

    for axis in (0, 1):
        if axis == 0:
            _, a_plus, _, g_plus = pulled(x + fd_eps, v)
            _, a_minus, _, g_minus = pulled(x - fd_eps, v)
        else:
            _, a_plus, _, g_plus = pulled(x, v + fd_eps)
            _, a_minus, _, g_minus = pulled(x, v - fd_eps)
        hess_g[:, axis, :] = (g_plus - g_minus) / (2.0 * fd_eps)
        div_a += (a_plus[:, axis, :] - a_minus[:, axis, :]) / (2.0 * fd_eps)

    hess_g = 0.5 * (hess_g + np.transpose(hess_g, (0, 2, 1)))

    gamma = np.atleast_2d(
        hamiltonian.gamma_term(
            image, t, spec, params, history, flow.flow.dt, fd_eps=fd_eps
        )
    )

    grad_log_u = fields.grad(xs, vs)
    hess_log_u = fields.hessian(xs, vs)

    beta_m = params.beta_m
    grad_theta = grad_log_u + beta_m * grad_g
    hess_theta = hess_log_u + beta_m * hess_g

    drift = (
        div_a
        + np.einsum("nab,nb->na", a_tilde, grad_log_u)
        - beta_m * np.einsum("nab,nb->na", a_tilde, grad_g)
        + gamma
    )

    rate = (
        0.5 * np.sum(grad_theta * drift, axis=1)
        + np.einsum("nab,nba->n", a_tilde, hess_theta)
        + beta_m
        * np.sum(
            grad_h * _b_H(source, spec, params, image.x, image.v, t, history), axis=1
        )
        + _interaction_term(image.x, image.v, spec, params, ensemble, variant)
    )

    return _unbatch(rate, batched)
