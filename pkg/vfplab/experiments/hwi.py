"""
Partial HWI inequality
======================

Checks, for pairs of phase densities sharing their x-marginal,

  H(mu0 | mu_inf) - H(mu1 | mu_inf) <= sqrt(I(mu0 | mu_inf)) W_J(mu0, mu1)
                                       - kappa_M / 2 W_J(mu0, mu1)^2

with the degenerate metric W_J of J = diag(0, M), computed fiber by fiber
through exact one-dimensional quantile transport. The battery draws random
Gaussian-fiber pairs (then pairs with a two-bump first density) against the
Gaussian reference N(0, 1/(beta m)), for which kappa_M = M beta m. User
pairs read from x,v,f files are checked against a user reference. A pair
with mismatched x-marginals exercises the infinite-distance branch.

Two further diagnostics run on the same grid:

  * convexity of the relative entropy along the displacement interpolation
    of the first n_convexity battery pairs,
  * the metric derivative of an Onsager-only evolution, W_J(u_t+delta, u_t)
    / delta against the metric slope, at n_probes times probe_dt apart.


Sections
--------

  * [params]
  * [hwi]     n_pairs, n_perturbed, M, seed, x_half, v_half, nx, nv,
              n_probes, probe_dt, delta, n_convexity, reference, pairs
  * [checks]  metric_rel, metric_abs, convexity_rel, convexity_abs


Artifacts
---------

  * hwi.csv                pair_id,H0,H1,I0,WJ,kappa,lhs,rhs,holds
  * convexity.csv          pair_id,defect,kappa_W2
  * metric_derivative.csv  t,speed,slope,residual

"""
import itertools

import numpy as np

from vfplab import generic
from vfplab import transport
from vfplab import util
from vfplab import writing
from vfplab.density import GridSpec
from vfplab.errors import ConfigError
from vfplab.experiments.base import Experiment
from vfplab.experiments.base import worst_ratio


class Hwi(Experiment):
    def run(self):
        if self.params.dim != 1:
            raise ConfigError("[params] the hwi pipeline needs dim = 1")

        details = self.settings["hwi"]
        grid = GridSpec.symmetric(
            details["x_half"], details["v_half"], details["nx"], details["nv"]
        )

        series = [self._battery(grid, details)]
        series.append(self._convexity(grid, details))
        series.append(self._metric_derivative(grid, details))

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(self.plot_file("hwi.pdf"), series=series)

    def _battery(self, grid, details):
        util.header1("Partial HWI inequality")

        M = details["M"]
        reports = transport.hwi_battery(
            grid,
            self.params,
            n_pairs=details["n_pairs"],
            n_perturbed=details["n_perturbed"],
            M=M,
            seed=details["seed"],
        )
        reports += self._user_pairs(M)

        mu0, mu1 = transport.shifted_marginal_pair(grid, self.params)
        mu_inf = transport.battery_reference(grid, self.params)
        degenerate = transport.hwi_check(mu0, mu1, mu_inf, M, M * self.params.beta_m)
        reports.append(degenerate)

        rows = np.array([report.as_row(k) for k, report in enumerate(reports)])
        self.writer.table("hwi.csv", list(transport.HWI_COLUMNS), rows, plot=None)

        finite = [report for report in reports if not report.degenerate]
        violations = sum(not report.holds for report in finite)

        util.print_items(
            [
                ("pairs", len(finite)),
                ("violations", violations),
                ("smallest margin", min(report.margin for report in finite)),
                ("degenerate pairs", len(reports) - len(finite)),
            ]
        )

        self.check("HWI violations", violations, 0)
        self.check("infinite W_J not flagged", float(not degenerate.degenerate), 0)

        margins = np.array([[k, report.margin] for k, report in enumerate(finite)])
        return ("HWI margin", ["pair_id", "margin"], margins)

    def _user_pairs(self, M):
        details = self.settings["hwi"]
        paths = details["pairs"]

        if not paths:
            return []

        if details["reference"] is None:
            raise ConfigError("[hwi] 'pairs' needs a 'reference' density file")

        if len(paths) % 2:
            raise ConfigError("[hwi] 'pairs' must list an even number of files")

        util.header2("User pairs")

        mu_inf = writing.read_density(details["reference"])
        densities = [writing.read_density(path) for path in paths]
        reports = []

        for mu0, mu1 in zip(densities[0::2], densities[1::2]):
            report = transport.hwi_check(mu0, mu1, mu_inf, M)
            reports.append(report)
            if self.verbose:
                print(f"  lhs = {report.lhs: .6e}  rhs = {report.rhs: .6e}")

        return reports

    def _convexity(self, grid, details):
        util.header2("Entropy convexity along displacement interpolation")

        M = details["M"]
        kappa = M * self.params.beta_m
        mu_inf = transport.battery_reference(grid, self.params)
        pairs = transport.battery_pairs(
            grid, self.params, details["n_pairs"], 0, details["seed"]
        )
        rows = []

        for k, (mu0, mu1) in enumerate(itertools.islice(pairs, details["n_convexity"])):
            defect, kappa_W2 = transport.convexity_defect(mu0, mu1, mu_inf, M, kappa)
            rows.append([k, defect, kappa_W2])

        rows = np.array(rows).reshape(-1, 3)
        self.writer.table("convexity.csv", ["pair_id", "defect", "kappa_W2"], rows)

        if len(rows):
            limits = self.limits
            self.check(
                "convexity defect (ratio)",
                worst_ratio(
                    np.maximum(-rows[:, 1], 0.0),
                    rows[:, 2],
                    limits["convexity_rel"],
                    limits["convexity_abs"],
                ),
                1.0,
            )

        return ("convexity", ["pair_id", "defect", "kappa_W2"], rows)

    def _metric_derivative(self, grid, details):
        util.header2("Metric derivative of the Onsager-only flow")

        reference_std = 1.0 / np.sqrt(self.params.beta_m)
        u0 = transport.gaussian_fiber_density(
            grid,
            np.exp(-0.5 * grid.x ** 2),
            0.5 * reference_std * np.tanh(grid.x),
            2.0 * reference_std,
        )
        curve = generic.onsager_flow(
            u0, self.params, details["probe_dt"], details["n_probes"]
        )
        rows = []

        for k, u in enumerate(curve[:-1]):
            t = k * details["probe_dt"]
            speed, slope = transport.metric_derivative(u, self.params, details["delta"])
            rows.append([t, speed, slope, abs(speed - slope)])
            if self.verbose:
                print(f"  t = {t:6.3f}  speed = {speed:.6e}  slope = {slope:.6e}")

        rows = np.array(rows)
        columns = ["t", "speed", "slope", "residual"]
        self.writer.table("metric_derivative.csv", columns, rows)

        limits = self.limits
        self.check(
            "metric derivative (ratio)",
            worst_ratio(
                rows[:, 3], rows[:, 2], limits["metric_rel"], limits["metric_abs"]
            ),
            1.0,
        )

        return ("metric derivative", columns, rows)
