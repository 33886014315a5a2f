"""
Particle simulation
===================

Runs the interacting N-particle approximation of the mean-field Langevin
equation (kick, drift, exact Ornstein-Uhlenbeck, kick) and estimates the
phase-space density of every recorded snapshot with a Gaussian product
kernel. The free energy, the conservative energy, the entropy and the
dissipation of each estimate are written as a time series.


Sections
--------

  * [params]       m, gamma, kB_TB (dim, optional)
  * [confinement]  kind (quadratic, quartic, zero, tabulated, expression) + keys
  * [interaction]  kind (zero, quadratic, gaussian, tabulated, expression) + keys
  * [simulation]   n_particles, dt, t_end, seed, record_every, init, sx, sv,
                   mx, mv, samples, trajectory_stride, density_every, bandwidth
  * [grid]         x_min, x_max, v_min, v_max, nx, nv (density estimates)


Artifacts
---------

  * trajectories.csv  t,particle_id,x,v
  * moments.csv       t,EX2,EV2,EX4,EV4,mean_v
  * energy.csv        t,F,H,I,entropy
  * density_*.csv     x,v,f (the last record, plus every density_every-th)
  * momentum.fit      exponential fit of mean(v)(t) (gamma > 0, mv != 0)
  * kramers.csv       t,EX2,EV2 exact harmonic moments (quadratic U, K = 0)


Checks
------

  * standing assumptions on U and K probed on [-6, 6]
  * largest increase of F between records (<= particle_abs)
  * largest fourth moment (<= moment_bound)
  * relative error of the fitted momentum decay rate against gamma/m when
    U = 0 (<= 0.05)
  * second moments against the exact harmonic ones (relative, particle_rel)

"""
import numpy as np

from vfplab import fitting
from vfplab import functionals
from vfplab import langevin
from vfplab import stationary
from vfplab import util
from vfplab.experiments.base import estimate
from vfplab.experiments.base import Experiment
from vfplab.experiments.base import sim_config
from vfplab.experiments.base import worst_ratio
from vfplab.potentials import Quadratic

MOMENTUM_TOL = 0.05


class Simulate(Experiment):
    def run(self):
        details = self.settings["simulation"]
        config = sim_config(details, self.seed)

        util.header1("Particle Simulation")
        util.print_items(
            [
                ("particles", config.n_particles),
                ("dt", config.dt),
                ("t_end", config.t_end),
                ("records", config.n_records),
                ("seed", config.seed),
            ]
        )

        self.validate_potentials()

        store, _ = langevin.simulate(config, self.spec, self.params, self.verbose)

        util.header2("Writing trajectories")
        stride = details["trajectory_stride"]
        self.writer.trajectories("trajectories.csv", store, stride)

        mean_v = store.mean_velocity.reshape(len(store), -1)
        columns = ["t", "EX2", "EV2", "EX4", "EV4"]
        if mean_v.shape[1] == 1:
            columns.append("mean_v")
        else:
            columns += [f"mean_v{i}" for i in range(1, mean_v.shape[1] + 1)]

        rows = np.column_stack([store.times, store.moments, mean_v])
        self.writer.table("moments.csv", columns, rows)

        self.check(
            "fourth moment",
            np.max(store.moments[:, 2:4]),
            self.limits["moment_bound"],
        )

        self._momentum(store, mean_v[:, 0], details["mv"])
        self._kramers(store, details)

        if self.params.dim == 1:
            self._energies(store, details)

    def _energies(self, store, details):
        util.header2("Density estimates")

        grid = self.settings.grid
        reports, snapshots = [], []
        every = details["density_every"]

        for index, ensemble in enumerate(store):
            f = estimate(ensemble, grid, details)
            report = functionals.energy_report(f, self.spec, self.params, ensemble.time)
            reports.append(report)
            if index == len(store) - 1 or (every and index % every == 0):
                snapshots.append((index, f))

        rows = np.array([report.as_row() for report in reports])
        self.writer.table("energy.csv", ["t", "F", "H", "I", "entropy"], rows)

        for index, f in snapshots:
            self.writer.density(f"density_{index:04d}.csv", f)

        increase = np.max(np.diff(rows[:, 1]), initial=0.0)
        self.check("F increase", increase, self.limits["particle_abs"])

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(
                self.plot_file("simulate.pdf"),
                series=[("energy", ["t", "F", "H", "I", "entropy"], rows)],
                densities=[(f"record {index}", f) for index, f in snapshots],
            )

    def _kramers(self, store, details):
        harmonic = isinstance(self.spec.U, Quadratic) and self.spec.U.center == 0.0

        gaussian_start = details["init"] == "gaussian"

        if not (harmonic and self.spec.interaction_off and gaussian_start):
            return

        if self.params.dim != 1:
            return

        util.header2("Harmonic reference moments")

        exact = stationary.kramers_moments(
            self.params,
            self.spec.U.kappa,
            mean0=[details["mx"], details["mv"]],
            cov0=np.diag([details["sx"] ** 2, details["sv"] ** 2]),
            times=store.times,
        )
        second = exact.values[:, [2, 4]]

        rows = np.column_stack([store.times, second])
        self.writer.table("kramers.csv", ["t", "EX2", "EV2"], rows)

        gap = np.abs(store.moments[:, 0:2] - second)
        self.check(
            "harmonic second moments (ratio)",
            worst_ratio(gap, second, self.limits["particle_rel"], 0.0),
            1.0,
        )

    def _momentum(self, store, mean_v, initial_mean):
        if self.params.gamma <= 0.0 or len(store) < 3 or initial_mean == 0.0:
            return

        util.header2("Momentum decay")

        fit = fitting.fit_momentum_decay(
            store.times, mean_v, rate_guess=self.params.friction_rate
        )
        util.print_items(
            [("fitted rate", fit.rate), ("gamma / m", self.params.friction_rate)]
        )
        path = fitting.write_statistics(fit.result, self.writer.out_dir, "momentum.fit")
        self.writer.register(path)

        if self.spec.U.is_zero:
            self.check(
                "momentum decay rate",
                fit.relative_error(self.params.friction_rate),
                MOMENTUM_TOL,
            )
