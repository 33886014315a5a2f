"""
Stationary measure
==================

Solves the self-consistent Gibbs equation

  f_inf = exp(-beta m h_f_inf) / Z

by a damped Picard iteration on the x-marginal, the velocity factor being
the exact Gaussian N(0, 1/(beta m)). The dissipation of the solution must
vanish. For a harmonic confinement without interaction the variances are
compared with the closed-form Kramers values, and with evolve_t > 0 the grid
solver is started from f_inf to confirm that it stays put.


Sections
--------

  * [params], [confinement], [interaction], [grid]
  * [stationary]  damping, tol, max_iter, evolve_t
  * [pde]         dt, scheme, theta, accuracy (only with evolve_t > 0)
  * [checks]      stationary_I, stationary_L1, kramers_rel


Artifacts
---------

  * stationary.csv   x,v,f
  * convergence.csv  iteration,residual
  * energy.csv       t,F,H,I,entropy
  * drift.csv        t,L1 (only with evolve_t > 0)

"""
import numpy as np

from vfplab import functionals
from vfplab import kinetic
from vfplab import stationary
from vfplab import util
from vfplab.errors import ConfigError
from vfplab.experiments.base import Experiment
from vfplab.potentials import Quadratic


class Stationary(Experiment):
    def run(self):
        if self.params.dim != 1:
            raise ConfigError("[params] the stationary pipeline needs dim = 1")

        util.header1("Stationary measure")
        self.validate_potentials()

        details = self.settings["stationary"]
        grid = self.settings.grid

        fixed_point = stationary.solve_gibbs(
            self.spec,
            self.params,
            grid,
            damping=details["damping"],
            tol=details["tol"],
            max_iter=details["max_iter"],
            verbose=self.verbose,
        )
        f_inf = fixed_point.density

        self.writer.density("stationary.csv", f_inf)
        residuals = np.column_stack(
            [np.arange(1, fixed_point.iterations + 1), fixed_point.residuals]
        )
        self.writer.table("convergence.csv", ["iteration", "residual"], residuals)

        report = functionals.energy_report(f_inf, self.spec, self.params)
        energy = np.atleast_2d(report.as_row())
        self.writer.table("energy.csv", ["t", "F", "H", "I", "entropy"], energy)

        util.print_items(
            [
                ("iterations", fixed_point.iterations),
                ("last L1 update", fixed_point.residuals[-1]),
                ("F", report.F),
                ("I", report.I),
            ]
        )

        self.check("I(f_inf)", report.I, self.limits["stationary_I"])

        self._kramers(f_inf)

        if details["evolve_t"] > 0.0:
            self._drift(f_inf, details["evolve_t"])

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(
                self.plot_file("stationary.pdf"),
                series=[("convergence", ["iteration", "residual"], residuals)],
                densities=[("f_inf", f_inf)],
            )

    def _kramers(self, f_inf):
        if not (isinstance(self.spec.U, Quadratic) and self.spec.interaction_off):
            return

        util.header2("Harmonic reference")

        reference = stationary.kramers_reference(self.params, self.spec.U.kappa)
        _, cov = f_inf.moments()
        error_x = abs(cov[0, 0] / reference.var_x - 1.0)
        error_v = abs(cov[1, 1] / reference.var_v - 1.0)

        util.print_items(
            [
                ("var x (grid, exact)", f"{cov[0, 0]:.8e}, {reference.var_x:.8e}"),
                ("var v (grid, exact)", f"{cov[1, 1]:.8e}, {reference.var_v:.8e}"),
            ]
        )

        self.check("var x relative error", error_x, self.limits["kramers_rel"])
        self.check("var v relative error", error_v, self.limits["kramers_rel"])

    def _drift(self, f_inf, t_end):
        util.header2("Grid solver started at f_inf")

        pde = self.settings["pde"]
        run = kinetic.evolve(
            f_inf,
            self.spec,
            self.params,
            dt=pde["dt"],
            t_end=t_end,
            record_every=pde["record_every"],
            scheme=pde["scheme"],
            theta=pde["theta"],
            accuracy=pde["accuracy"],
            verbose=self.verbose,
        )

        rows = np.array(
            [[t, f.l1_distance(f_inf)] for t, f in zip(run.times, run.densities)]
        )
        self.writer.table("drift.csv", ["t", "L1"], rows)

        drift = float(np.max(rows[:, 1]))
        util.print_items([("max L1 distance to f_inf", drift)])
        self.check("L1 drift from f_inf", drift, self.limits["stationary_L1"])
