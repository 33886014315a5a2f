"""The kinetic module contains the grid solver of the nonlinear
Vlasov-Fokker-Planck equation (d = 1).

The right-hand side splits into the transport part -{f, h_f} =
-v d_x f + (F/m) d_v f, with F = d_x(U + K*f), on the Poisson bracket of
vfplab.generic, and the velocity
drift-diffusion part written as an Onsager flux (see vfplab.generic).
Time stepping is a Strang splitting: half a step of implicit exponentially
fitted drift-diffusion, a full transport step with the mean field refreshed
from the current density, and another half step of drift-diffusion.
"""
import dataclasses

import numpy as np

from vfplab import functionals
from vfplab import generic
from vfplab.density import PhaseDensity
from vfplab.errors import ConfigError
from vfplab.errors import DomainError
from vfplab.stencils import derivative_matrix

SCHEMES = ("central", "upwind")
CFL_SAFETY = 0.5


def potential_field(f, spec):
    """U(x) + (K*f)(x) on the x-nodes of the grid."""
    x = f.grid.x[:, None]
    return spec.U.value(x) + functionals.interaction_value(f, spec, x)


def force_field(f, spec, accuracy=6):
    """F(x) = d_x(U + K*f) with the shared x-stencil."""
    grid = f.grid
    matrix = derivative_matrix(grid.nx, grid.dx, 1, accuracy)
    return np.asarray(matrix @ potential_field(f, spec))


def transport_rhs(values, grid, h, accuracy=6):
    """-{f, h} = -v d_x f + (F(x)/m) d_v f on the Poisson bracket."""
    return -generic.poisson_bracket(values, h, grid, accuracy)


def dissipative_rhs(f, params, mobility="logarithmic"):
    """d_v(sigma^2/2 f d_v(ln f + beta m v^2/2)) in flux form."""
    log_f = np.log(np.maximum(f.values, generic.LOG_FLOOR))
    mu = log_f + 0.5 * params.beta_m * f.grid.v[None, :] ** 2
    return -generic.onsager_apply(f, mu, params=params, mobility=mobility)


def vfp_rhs(f, spec, params, accuracy=6, mobility="logarithmic"):
    """Discrete right-hand side of the kinetic equation at f."""
    h = functionals.h_field(f, spec, params, weight=1.0)
    transport = transport_rhs(f.values, f.grid, h, accuracy)
    return transport + dissipative_rhs(f, params, mobility)


def cfl_limit(f, spec, params, accuracy=6):
    """Upper bounds on dt from transport in x, in v, and from diffusion."""

    grid = f.grid
    v_max = max(abs(grid.v_min), abs(grid.v_max))
    force_max = np.max(np.abs(force_field(f, spec, accuracy))) / params.m
    limits = {
        "dx/v_max": grid.dx / v_max,
        "dv/force_max": grid.dv / force_max if force_max > 0.0 else np.inf,
        "dv^2/sigma^2": (
            grid.dv ** 2 / params.sigma ** 2 if params.sigma > 0.0 else np.inf
        ),
    }
    return {name: CFL_SAFETY * value for name, value in limits.items()}


def check_cfl(dt, f, spec, params, accuracy=6):
    limits = cfl_limit(f, spec, params, accuracy)
    name = min(limits, key=limits.get)
    if dt > limits[name]:
        raise ConfigError(
            f"dt = {dt:.3e} violates the CFL bound {name}: dt <= {limits[name]:.3e}"
        )
    return limits


def _rk4(values, rhs, dt):
    k1 = rhs(values)
    k2 = rhs(values + 0.5 * dt * k1)
    k3 = rhs(values + 0.5 * dt * k2)
    k4 = rhs(values + dt * k3)
    return values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _van_leer(theta):
    return (theta + np.abs(theta)) / (1.0 + np.abs(theta))


def _advect(q, speed, dt, spacing):
    """Flux-limited Lax-Wendroff step of q_t + c q_s = 0 along axis 0.

    c (one value per column) is constant along the sweep; zero inflow.
    """

    n = q.shape[0]
    padded = np.pad(q, [(2, 2), (0, 0)])
    jump = np.diff(padded, axis=0)

    c = speed[None, :]
    nu = c * dt / spacing

    # Faces k + 1/2 between padded cells k and k + 1, k = 1..n + 1.
    left = padded[1 : n + 2]
    right = padded[2 : n + 3]
    centre_jump = jump[1 : n + 2]
    behind = jump[0 : n + 1]
    ahead = jump[2 : n + 3]

    upwind_jump = np.where(c >= 0.0, behind, ahead)
    ratio = np.divide(
        upwind_jump,
        centre_jump,
        out=np.zeros_like(centre_jump),
        where=centre_jump != 0.0,
    )

    flux = np.where(c >= 0.0, c * left, c * right)
    flux += 0.5 * np.abs(c) * (1.0 - np.abs(nu)) * _van_leer(ratio) * centre_jump

    return q - dt / spacing * np.diff(flux, axis=0)


def transport_step(values, grid, h, force, m, dt, scheme="central", accuracy=6):
    """Advance the transport part by dt with the mean field frozen.

    The central scheme steps -{f, h}; the upwind scheme advects with v and
    the force F.
    """

    if scheme == "central":
        stepped = _rk4(values, lambda q: transport_rhs(q, grid, h, accuracy), dt)
        return np.maximum(stepped, 0.0)

    if scheme == "upwind":
        acceleration = -force / m
        half = _advect(values, grid.v, 0.5 * dt, grid.dx)
        full = _advect(half.T, acceleration, dt, grid.dv).T
        return np.maximum(_advect(full, grid.v, 0.5 * dt, grid.dx), 0.0)

    raise ConfigError(f"unknown transport scheme '{scheme}', choose from {SCHEMES}")


@dataclasses.dataclass
class KineticRun:
    times: list
    densities: list
    reports: list
    mass_defects: list

    def energy_rows(self):
        return np.array([report.as_row() for report in self.reports])

    def density_at(self, t):
        index = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.densities[index]


def evolve(
    f0,
    spec,
    params,
    dt,
    t_end,
    record_every=1,
    scheme="central",
    theta=0.5,
    accuracy=6,
    check=True,
    verbose=False,
):
    """Strang-split time stepping from f0 to t_end.

    Returns a KineticRun with the recorded densities and their EnergyReport.
    """

    if dt <= 0.0 or t_end <= 0.0:
        raise DomainError(f"need dt > 0 and t_end > 0, got {dt}, {t_end}")

    if scheme not in SCHEMES:
        raise ConfigError(f"unknown transport scheme '{scheme}', choose from {SCHEMES}")

    f = f0.normalized()

    if check:
        check_cfl(dt, f, spec, params, accuracy)

    grid = f.grid
    n_steps = int(np.floor(t_end / dt + 1e-9))

    def report(density, t):
        return functionals.energy_report(density, spec, params, t, accuracy=accuracy)

    run = KineticRun([0.0], [f], [report(f, 0.0)], [f.mass_defect])
    values = f.values

    for k in range(1, n_steps + 1):
        values = generic.drift_diffusion_step(values, grid, params, 0.5 * dt, theta)
        frozen = PhaseDensity(grid, np.maximum(values, 0.0))
        h = functionals.h_field(frozen, spec, params, weight=1.0)
        force = force_field(frozen, spec, accuracy)
        values = transport_step(values, grid, h, force, params.m, dt, scheme, accuracy)
        values = generic.drift_diffusion_step(values, grid, params, 0.5 * dt, theta)

        values = np.maximum(values, 0.0)
        current = PhaseDensity(grid, values)
        defect = current.mass_defect
        values = current.normalized().values

        if k % record_every == 0 or k == n_steps:
            t = k * dt
            density = PhaseDensity(grid, values)
            run.times.append(t)
            run.densities.append(density)
            run.reports.append(report(density, t))
            run.mass_defects.append(defect)

            if verbose:
                last = run.reports[-1]
                print(f"  t = {t:8.4f}  F = {last.F: .8e}  I = {last.I:.4e}")

    return run
