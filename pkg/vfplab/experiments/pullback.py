"""
Pullback along the Hamiltonian flow
===================================

Runs the particle system, records the mean-field force history and pulls
every snapshot back along the reversible flow, Z~_t = Phi_{-t}(Z_t). The
free energy and the dissipation of the density f_t are compared with their
pulled-back counterparts evaluated on the density u_t of Z~_t:

  F(f_t) = F~_t(u_t)    and    I(f_t) = I~(u_t)

at n_times recorded times spread over the run.


Sections
--------

  * [params], [confinement], [interaction], [grid], [simulation]
  * [flow]    dt (flow integration step), n_times, method (grid or samples)
  * [checks]  pullback_F, pullback_I_rel, pullback_I_abs


Artifacts
---------

  * pullback.csv  t,F,F_tilde,I,I_tilde
  * pulled_back_trajectories.csv  t,particle_id,x,v

"""
import numpy as np

from vfplab import functionals
from vfplab import hamiltonian
from vfplab import langevin
from vfplab import util
from vfplab.errors import ConfigError
from vfplab.experiments.base import estimate
from vfplab.experiments.base import Experiment
from vfplab.experiments.base import sim_config
from vfplab.experiments.base import worst_ratio

COLUMNS = ["t", "F", "F_tilde", "I", "I_tilde"]


def probe_indices(n_records, n_times):
    """n_times record indices spread over 1 .. n_records - 1."""
    if n_records < 2:
        raise ConfigError("[simulation] the run records a single snapshot")
    indices = np.linspace(1, n_records - 1, min(n_times, n_records - 1))
    return np.unique(np.round(indices).astype(int))


class Pullback(Experiment):
    def run(self):
        if self.params.dim != 1:
            raise ConfigError("[params] the pullback pipeline needs dim = 1")

        details = self.settings["simulation"]
        flow_details = self.settings["flow"]
        method = flow_details["method"]

        if method not in ("grid", "samples"):
            raise ConfigError(f"[flow] unknown method '{method}', use grid or samples")

        util.header1("Pullback along the Hamiltonian flow")
        self.validate_potentials()

        config = sim_config(details, self.seed)
        store, history = langevin.simulate(config, self.spec, self.params, self.verbose)

        util.header2("Pulling back the snapshots")
        pulled = langevin.pulled_back_trajectories(
            store, self.spec, self.params, history, flow_details["dt"], self.threads
        )
        self.writer.trajectories(
            "pulled_back_trajectories.csv", pulled, details["trajectory_stride"]
        )

        grid = self.settings.grid
        rows = []

        for index in probe_indices(len(store), flow_details["n_times"]):
            t = store.times[index]
            f = estimate(store.snapshot(index), grid, details)
            pulled_back = pulled.snapshot(index)
            u = estimate(pulled_back, grid, details)
            flow = hamiltonian.flow_map(
                t, self.spec, self.params, history, flow_details["dt"]
            )
            samples = pulled_back.particles if method == "samples" else None

            F = functionals.free_energy(f, self.spec, self.params)
            F_tilde = functionals.pulled_back_free_energy(
                u, flow, f, self.spec, self.params, t, method, samples
            )
            I = functionals.dissipation_I(f, self.spec, self.params)
            I_tilde = functionals.pulled_back_dissipation(
                u, flow, self.spec, self.params, t, method, samples
            )
            rows.append([t, F, F_tilde, I, I_tilde])

            if self.verbose:
                print(f"  t = {t:8.4f}  F = {F: .6e}  F~ = {F_tilde: .6e}")

        rows = np.array(rows)
        self.writer.table("pullback.csv", COLUMNS, rows)

        gap_F = np.abs(rows[:, 1] - rows[:, 2])
        gap_I = np.abs(rows[:, 3] - rows[:, 4])
        limits = self.limits

        util.print_items(
            [
                ("max |F - F~|", float(np.max(gap_F))),
                ("max |I - I~|", float(np.max(gap_I))),
            ]
        )

        self.check("|F - F~|", np.max(gap_F), limits["pullback_F"])
        self.check(
            "|I - I~| (ratio)",
            worst_ratio(
                gap_I, rows[:, 3], limits["pullback_I_rel"], limits["pullback_I_abs"]
            ),
            1.0,
        )

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(
                self.plot_file("pullback.pdf"), series=[("pullback", COLUMNS, rows)]
            )
