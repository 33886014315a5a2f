"""The hamiltonian module contains the code for the reversible flow.

The flow transports phase points along b_H(z) = (v, -(grad U + grad K*f_t)/m)
with a kick-drift-kick splitting. The mean-field part of the force is read
from a ForceFieldHistory recorded by a simulation (linear in time, cubic in
x) and frozen at the midpoint of every step, which makes each step exactly
invertible and volume preserving. The first-variation (Jacobian) equation is
advanced with the tangent map of the same splitting. The self-consistent
ensemble transport of energy_drift uses the fourth-order triple-jump
composition of the splitting by default.
"""
import dataclasses
import math

import numpy as np
from scipy import interpolate

from vfplab import util
from vfplab.ensemble import PhasePoint
from vfplab.errors import ConfigError
from vfplab.errors import CoverageError
from vfplab.errors import DomainError

TIME_SLACK = 1e-9

_CBRT2 = 2.0 ** (1.0 / 3.0)
COMPOSITIONS = {
    2: (1.0,),
    4: (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2)),
}


class ForceFieldHistory:
    """Tabulated x -> grad(K*f_t)(x) at increasing record times.

    With the interaction off the tabulation is empty and only the record
    times are kept.
    """

    def __init__(self, times, x_grid=None, mean_field_grad=None):
        times = np.asarray(times, dtype=float)

        if times.ndim != 1 or len(times) == 0:
            raise DomainError("history needs a nonempty 1-d array of times")

        if np.any(np.diff(times) <= 0.0):
            raise DomainError("history times must be strictly increasing")

        self.times = times

        if mean_field_grad is None or x_grid is None:
            self.x_grid = None
            self.mean_field_grad = np.zeros((len(times), 0))
            self._splines = []
            return

        x_grid = np.asarray(x_grid, dtype=float)
        table = np.asarray(mean_field_grad, dtype=float)

        if table.shape != (len(times), len(x_grid)):
            raise DomainError(
                f"tabulation shape {table.shape} does not match "
                f"({len(times)}, {len(x_grid)})"
            )

        self.x_grid = x_grid
        self.mean_field_grad = table
        self._splines = [interpolate.CubicSpline(x_grid, row) for row in table]

    @property
    def interaction_on(self):
        return self.x_grid is not None

    def covers(self, t):
        return self.times[0] - TIME_SLACK <= t <= self.times[-1] + TIME_SLACK

    def check_coverage(self, *times):
        for t in times:
            if self.interaction_on and not self.covers(t):
                raise CoverageError(
                    f"t = {t:.6g} outside the recorded history "
                    f"[{self.times[0]:.6g}, {self.times[-1]:.6g}]"
                )

    def _bracket(self, t):
        if len(self.times) == 1:
            return 0, 0, 0.0
        t = min(max(t, self.times[0]), self.times[-1])
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        weight = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return k, k + 1, weight

    def _evaluate(self, t, x, nu):
        k0, k1, weight = self._bracket(t)
        first = self._splines[k0](x, nu)
        if weight == 0.0:
            return first
        return (1.0 - weight) * first + weight * self._splines[k1](x, nu)

    def force(self, t, x):
        """grad(K*f_t) at positions x of shape (n, 1)."""
        x = np.asarray(x, dtype=float)
        if not self.interaction_on:
            return np.zeros_like(x)
        return self._evaluate(t, x[..., 0], 0)[..., None]

    def force_derivative(self, t, x):
        """Hessian of K*f_t at positions x, shape (n, 1, 1)."""
        x = np.asarray(x, dtype=float)
        if not self.interaction_on:
            return np.zeros(x.shape + x.shape[-1:])
        return self._evaluate(t, x[..., 0], 1)[..., None, None]


class HamiltonianFlow:
    """Splitting integrator for b_H with its tangent map."""

    def __init__(self, spec, params, history=None, dt=1e-3):
        if dt <= 0.0:
            raise DomainError(f"flow step must be positive, got {dt}")

        if history is None:
            if not spec.interaction_off:
                raise ConfigError("an interacting flow needs a ForceFieldHistory")
            history = ForceFieldHistory([0.0])

        if history.interaction_on and params.dim != 1:
            raise ConfigError("tabulated mean fields are one-dimensional")

        self.spec = spec
        self.params = params
        self.history = history
        self.dt = float(dt)

    def force(self, x, t):
        force = self.spec.U.gradient(x)
        if self.history.interaction_on:
            force = force + self.history.force(t, x)
        return force

    def force_jacobian(self, x, t):
        jac = self.spec.U.hessian(x)
        if self.history.interaction_on:
            jac = jac + self.history.force_derivative(t, x)
        return jac

    def n_steps(self, duration):
        return int(math.ceil(abs(duration) / self.dt - 1e-9))

    def propagate(self, x, v, t_start, t_end, jacobian=None):
        """Map states at t_start to t_end; optionally carry the tangent map.

        x, v have shape (n, d); jacobian has shape (n, 2d, 2d).
        """
        self.history.check_coverage(t_start, t_end)

        x = np.array(x, dtype=float)
        v = np.array(v, dtype=float)
        n = self.n_steps(t_end - t_start)

        if n == 0:
            return x, v, jacobian

        h = (t_end - t_start) / n
        half = 0.5 * h / self.params.m
        dim = x.shape[-1]

        if jacobian is not None:
            jac = np.array(jacobian, dtype=float)
            jx, jv = jac[:, :dim, :], jac[:, dim:, :]

        for k in range(n):
            s = t_start + (k + 0.5) * h

            if jacobian is not None:
                kick = np.einsum("nij,njk->nik", self.force_jacobian(x, s), jx)
                jv = jv - half * kick
            v = v - half * self.force(x, s)

            x = x + h * v
            if jacobian is not None:
                jx = jx + h * jv

            if jacobian is not None:
                kick = np.einsum("nij,njk->nik", self.force_jacobian(x, s), jx)
                jv = jv - half * kick
            v = v - half * self.force(x, s)

        if jacobian is not None:
            jacobian = np.concatenate([jx, jv], axis=1)

        return x, v, jacobian


@dataclasses.dataclass
class FlowRecord:
    """Result of a flow evaluation from base_time over a (signed) time t.

    For t >= 0 the map is Phi_t from base_time to base_time + t; for t < 0
    it is the inverse map from base_time + |t| back to base_time.
    gamma is only filled on request (integrate_flow with_gamma).
    """

    base_time: float
    target_time: float
    position: np.ndarray
    velocity: np.ndarray
    jacobian: np.ndarray = None
    flow: HamiltonianFlow = None
    gamma: np.ndarray = None

    @property
    def point(self):
        return PhasePoint(self.position, self.velocity)

    @property
    def determinant(self):
        if self.jacobian is None:
            return None
        return np.linalg.det(self.jacobian)

    def phi(self, z):
        """Apply the same map to other phase points."""
        z = _as_point(z)
        start, end = _time_window(self.base_time, self.target_time)
        x, v, _ = self.flow.propagate(*_batched(z), start, end)
        return PhasePoint(x.reshape(z.x.shape), v.reshape(z.v.shape))

    def jacobian_at(self, z):
        """Jacobian of the same map at other phase points, shape (n, 2d, 2d)."""
        z = _as_point(z)
        x, v = _batched(z)
        start, end = _time_window(self.base_time, self.target_time)
        eye = np.broadcast_to(np.eye(2 * z.dim), (len(x), 2 * z.dim, 2 * z.dim))
        x, v, jacobian = self.flow.propagate(x, v, start, end, eye)
        return PhasePoint(x, v), jacobian


def _as_point(z):
    if isinstance(z, PhasePoint):
        return z
    return PhasePoint.from_array(z)


def _batched(z):
    dim = z.x.shape[-1]
    return z.x.reshape(-1, dim), z.v.reshape(-1, dim)


def _time_window(base_time, t):
    if t >= 0.0:
        return base_time, base_time + t
    return base_time - t, base_time


def integrate_flow(
    z0,
    t,
    spec,
    params,
    history=None,
    dt=1e-3,
    with_jacobian=False,
    base_time=0.0,
    with_gamma=False,
    fd_eps=1e-4,
):
    """Evaluate Phi_t(z0) (t >= 0) or the inverse map Phi_{-|t|}(z0) (t < 0).

    with_gamma also fills FlowRecord.gamma, sigma^2 times the velocity
    Laplacian of the same map at z0 (see gamma_term).
    """

    flow = HamiltonianFlow(spec, params, history, dt)
    z0 = _as_point(z0)
    x, v = _batched(z0)
    start, end = _time_window(base_time, t)

    jacobian = None
    if with_jacobian:
        jacobian = np.broadcast_to(np.eye(2 * z0.dim), (len(x), 2 * z0.dim, 2 * z0.dim))

    x, v, jacobian = flow.propagate(x, v, start, end, jacobian)

    if not z0.batched:
        x, v = x[0], v[0]
        jacobian = None if jacobian is None else jacobian[0]

    gamma = None
    if with_gamma:
        gamma = gamma_term(z0, -t, spec, params, history, dt, fd_eps, base_time)

    return FlowRecord(
        base_time=base_time,
        target_time=t,
        position=x,
        velocity=v,
        jacobian=jacobian,
        flow=flow,
        gamma=gamma,
    )


def flow_map(t, spec, params, history=None, dt=1e-3, base_time=0.0):
    """FlowRecord of Phi_t without a base point; use phi() and jacobian_at()."""
    flow = HamiltonianFlow(spec, params, history, dt)
    return FlowRecord(
        base_time=base_time, target_time=t, position=None, velocity=None, flow=flow
    )


def jacobian_along(z0, t, spec, params, history=None, dt=1e-3, base_time=0.0):
    """D Phi_t(z0) from the first-variation equation (same splitting)."""
    record = integrate_flow(
        z0, t, spec, params, history, dt, with_jacobian=True, base_time=base_time
    )
    return record.jacobian


def pullback_point(z, t, spec, params, history=None, dt=1e-3):
    """Z~ = Phi_{-t}(Z_t)."""
    return integrate_flow(z, -t, spec, params, history, dt).point


def gamma_term(
    z, t, spec, params, history=None, dt=1e-3, fd_eps=1e-4, base_time=0.0
):
    """Gamma^a = sigma^2 sum_i d^2 Phi^a_{-t}(z) / dv_i^2.

    Second derivatives are central differences of the Jacobian of Phi_{-t}
    over base points shifted by +/- fd_eps along each velocity axis.
    """

    if fd_eps <= 0.0:
        raise DomainError(f"fd_eps must be positive, got {fd_eps}")

    z = _as_point(z)
    zz = z.as_array().reshape(-1, 2 * z.dim)
    dim = z.dim
    gamma = np.zeros_like(zz)

    for i in range(dim):
        shift = np.zeros(2 * dim)
        shift[dim + i] = fd_eps
        plus = jacobian_along(zz + shift, -t, spec, params, history, dt, base_time)
        minus = jacobian_along(zz - shift, -t, spec, params, history, dt, base_time)
        gamma += (plus[:, :, dim + i] - minus[:, :, dim + i]) / (2.0 * fd_eps)

    gamma *= params.sigma ** 2

    return gamma if z.batched else gamma[0]


def gamma_term_bruteforce(z, t, spec, params, history=None, dt=1e-3, fd_eps=1e-3):
    """Gamma from second differences of Phi_{-t} itself (cross-check)."""

    z = _as_point(z)
    zz = z.as_array().reshape(-1, 2 * z.dim)
    dim = z.dim

    def phi(points):
        start = PhasePoint.from_array(points)
        record = integrate_flow(start, -t, spec, params, history, dt)
        return np.concatenate([record.position, record.velocity], axis=-1)

    center = phi(zz)
    gamma = np.zeros_like(zz)

    for i in range(dim):
        shift = np.zeros(2 * dim)
        shift[dim + i] = fd_eps
        gamma += (phi(zz + shift) - 2.0 * center + phi(zz - shift)) / fd_eps ** 2

    gamma *= params.sigma ** 2

    return gamma if z.batched else gamma[0]


@dataclasses.dataclass
class EnergyDrift:
    """Energy bookkeeping of a reversible transport of an ensemble."""

    times: np.ndarray
    h_particles: np.ndarray
    H: np.ndarray

    @property
    def trajectory_drift(self):
        """max_i sup_t |h_f(Z^i_t) - h_f(Z^i_0)|."""
        return float(np.max(np.abs(self.h_particles - self.h_particles[0])))

    @property
    def macroscopic_drift(self):
        """sup_t |H_t - H_0| / |H_0|."""
        scale = abs(self.H[0]) if self.H[0] != 0.0 else 1.0
        return float(np.max(np.abs(self.H - self.H[0])) / scale)


def energy_drift(
    positions, velocities, spec, params, t_end, dt=1e-3, record_every=10, order=4
):
    """Transport particles by the self-consistent reversible flow only.

    The mean field is recomputed from the transported particles at every
    kick, so the flow is the one generated by b_H for the empirical law.
    order 2 is plain kick-drift-kick, order 4 its triple-jump composition.
    Per-particle h_f and the macroscopic H_f are recorded along the way.
    """

    if order not in COMPOSITIONS:
        raise ConfigError(f"unknown composition order {order}, choose 2 or 4")

    x = np.array(positions, dtype=float).reshape(len(positions), -1)
    v = np.array(velocities, dtype=float).reshape(len(velocities), -1)
    m = params.m

    def force(points):
        result = spec.U.gradient(points)
        if not spec.interaction_off:
            result = result + spec.K.mean_field(points, points)
        return result

    def energies(points, speeds):
        kinetic = 0.5 * np.sum(speeds ** 2, axis=1)
        confinement = spec.U.value(points) / m
        interaction = spec.K.convolve(points, points) / m
        h = kinetic + confinement + interaction
        H = util.pairwise_mean(kinetic + confinement + 0.5 * interaction)
        return h, H

    n_steps = int(math.ceil(t_end / dt - 1e-9))
    times, h_records, H_records = [0.0], [], []
    h, H = energies(x, v)
    h_records.append(h)
    H_records.append(H)
    current = force(x)

    for k in range(1, n_steps + 1):
        for weight in COMPOSITIONS[order]:
            step = weight * dt
            v = v - 0.5 * step * current / m
            x = x + step * v
            current = force(x)
            v = v - 0.5 * step * current / m
        if k % record_every == 0 or k == n_steps:
            h, H = energies(x, v)
            times.append(k * dt)
            h_records.append(h)
            H_records.append(H)

    return EnergyDrift(np.array(times), np.array(h_records), np.array(H_records))
