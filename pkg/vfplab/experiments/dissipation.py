"""
Free-energy dissipation
=======================

Checks the dissipation identity dF/dt = -I(f_t) on two pipelines:

  * the grid solver (Strang splitting, exponentially fitted velocity
    drift-diffusion) started from a Gaussian product density,
  * the particle system, with densities estimated by kernel smoothing.

On the particle pipeline the ensemble mean of the trajectorial rate D is
compared with -I(f_t) for both forms of the interaction term; the form
closest to -I at most records is reported as the arbitrated variant.

The finite-difference fields entering I are checked for second-order
convergence on a smooth non-Gaussian density over three refinements.


Sections
--------

  * [params], [confinement], [interaction], [grid]
  * [pde]         dt, t_end, record_every, scheme, theta, accuracy, sx, sv, mx, mv
  * [simulation]  as for 'simulate'
  * [checks]      pde_rel, pde_abs, particle_rel, particle_abs


Artifacts
---------

  * energy_pde.csv          t,F,H,I,entropy
  * dissipation_pde.csv     t,dFdt,I,residual
  * energy_particles.csv    t,F,H,I,entropy
  * dissipation_particles.csv
                            t,dFdt,I,residual,D_own_velocity,D_copy_velocity

"""
import collections

import numpy as np

from vfplab import density
from vfplab import functionals
from vfplab import kinetic
from vfplab import langevin
from vfplab import util
from vfplab.density import GridSpec
from vfplab.experiments.base import estimate
from vfplab.experiments.base import Experiment
from vfplab.experiments.base import gaussian_density
from vfplab.experiments.base import identity_residuals
from vfplab.experiments.base import sim_config
from vfplab.experiments.base import worst_ratio

ENERGY_COLUMNS = ["t", "F", "H", "I", "entropy"]
MONOTONE_TOL = 1e-8
MIN_ORDER = 1.8
REFINEMENT = (32, 64, 128)


class Dissipation(Experiment):
    def run(self):
        if self.params.dim != 1:
            util.header1("Free-energy dissipation")
            print("  grid densities need dim = 1, nothing to do")
            return

        util.header1("Free-energy dissipation")
        self.validate_potentials()

        series = self._pde()
        series += self._particles()

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(self.plot_file("dissipation.pdf"), series=series)

    def _pde(self):
        util.header1("Dissipation identity: grid solver")

        details = self.settings["pde"]
        grid = self.settings.grid
        f0 = gaussian_density(grid, details)

        run = kinetic.evolve(
            f0,
            self.spec,
            self.params,
            dt=details["dt"],
            t_end=details["t_end"],
            record_every=details["record_every"],
            scheme=details["scheme"],
            theta=details["theta"],
            accuracy=details["accuracy"],
            verbose=self.verbose,
        )

        energy = run.energy_rows()
        self.writer.table("energy_pde.csv", ENERGY_COLUMNS, energy)

        t, dF_dt, I, residual = identity_residuals(
            energy[:, 0], energy[:, 1], energy[:, 3]
        )
        rows = np.column_stack([t, dF_dt, I, residual])
        columns = ["t", "dFdt", "I", "residual"]
        self.writer.table("dissipation_pde.csv", columns, rows)

        util.print_items(
            [
                ("max |dF/dt + I|", float(np.max(residual))),
                ("largest mass defect", float(np.max(run.mass_defects))),
            ]
        )

        limits = self.limits
        self.check(
            "pde identity (ratio)",
            worst_ratio(residual, I, limits["pde_rel"], limits["pde_abs"]),
            1.0,
        )
        increase = np.max(np.diff(energy[:, 1]), initial=0.0)
        self.check("pde F increase", increase, MONOTONE_TOL)
        self._derivative_order()

        return [("grid solver", columns, rows)]

    def _derivative_order(self):
        grids = [GridSpec.symmetric(4.0, 4.0, n, n) for n in REFINEMENT]
        orders = density.derivative_order(
            density.ripple_density, density.ripple_log_fields, grids
        )
        util.print_items(
            [(f"order of {name}", order) for name, order in orders.items()]
        )
        shortfall = max(MIN_ORDER - min(orders.values()), 0.0)
        self.check("derivative order shortfall", shortfall, 0.0)

    def _particles(self):
        util.header1("Dissipation identity: particles")

        details = self.settings["simulation"]
        grid = self.settings.grid
        config = sim_config(details, self.seed)
        store, _ = langevin.simulate(config, self.spec, self.params, self.verbose)

        reports, rates, picks = [], [], collections.Counter()

        for ensemble in store:
            f = estimate(ensemble, grid, details)
            report = functionals.energy_report(f, self.spec, self.params, ensemble.time)
            best, means = functionals.arbitrate_variant(
                ensemble, f, self.spec, self.params, reference=-report.I
            )
            reports.append(report)
            rates.append([means[variant] for variant in functionals.VARIANTS])
            picks[best] += 1

        energy = np.array([report.as_row() for report in reports])
        rates = np.array(rates)
        self.writer.table("energy_particles.csv", ENERGY_COLUMNS, energy)

        t, dF_dt, I, residual = identity_residuals(
            energy[:, 0], energy[:, 1], energy[:, 3]
        )
        rows = np.column_stack([t, dF_dt, I, residual, rates[1:-1]])
        columns = ["t", "dFdt", "I", "residual"]
        columns += [f"D_{variant}" for variant in functionals.VARIANTS]
        self.writer.table("dissipation_particles.csv", columns, rows)

        variant = max(functionals.VARIANTS, key=lambda name: picks[name])
        chosen = rates[1:-1, functionals.VARIANTS.index(variant)]

        util.print_items(
            [
                ("max |dF/dt + I|", float(np.max(residual))),
                ("arbitrated variant", variant),
                ("picks", ", ".join(f"{k}: {v}" for k, v in sorted(picks.items()))),
            ]
        )

        limits = self.limits
        rel, abs_ = limits["particle_rel"], limits["particle_abs"]
        ratio = worst_ratio(residual, I, rel, abs_)
        self.check("particle identity (ratio)", ratio, 1.0)
        self.check(
            "trajectorial mean (ratio)",
            worst_ratio(np.abs(chosen + I), I, rel, abs_),
            1.0,
        )

        return [("particles", columns, rows)]
