"""Shared machinery of the pipelines behind the subcommands."""
import abc
import dataclasses

import numpy as np

from vfplab import density
from vfplab import potentials
from vfplab import util
from vfplab.errors import ConfigError
from vfplab.langevin import SimConfig


@dataclasses.dataclass
class Check:
    """value <= limit, a NaN value fails."""

    name: str
    value: float
    limit: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.limit)


class Experiment(metaclass=abc.ABCMeta):
    """A pipeline: reads its settings, writes artifacts, records checks."""

    def __init__(self, settings, writer, seed, threads=1, plot=False, verbose=False):
        self.settings = settings
        self.writer = writer
        self.seed = seed
        self.threads = threads
        self.plot = plot
        self.verbose = verbose
        self.checks = []

    @property
    def spec(self):
        return self.settings.spec

    @property
    def params(self):
        return self.settings.params

    @property
    def limits(self):
        return self.settings["checks"]

    @abc.abstractmethod
    def run(self):
        pass

    def check(self, name, value, limit):
        self.checks.append(Check(name, float(value), float(limit)))

    def failures(self):
        return [check for check in self.checks if not check.passed]

    def print_checks(self):
        if not self.checks:
            return
        util.header2("Checks")
        width = max(len(check.name) for check in self.checks)
        for check in self.checks:
            status = "ok" if check.passed else "FAILED"
            print(
                f"  {check.name:<{width}s} : {check.value: .4e} <= "
                f"{check.limit:.4e}  [{status}]"
            )

    def validate_potentials(self, half_width=6.0, n_probes=201):
        """Probe the standing assumptions on U and K on [-w, w]."""

        probes = np.linspace(-half_width, half_width, n_probes)
        report = potentials.validate_assumptions(self.spec, probes)

        util.header2("Standing assumptions")
        util.print_items(
            [
                ("U", self.spec.U.describe()),
                ("K", self.spec.K.describe()),
                ("K symmetry defect", report.symmetry),
                ("grad K oddness defect", report.oddness),
                ("U lower-bound defect", report.lower_bound),
                ("Lipschitz grad U", report.lipschitz_grad_U),
                ("Lipschitz grad K", report.lipschitz_grad_K),
            ]
        )

        self.check("assumption violations", len(report.failures()), 0)

        return report

    def plot_file(self, name):
        return self.writer.out_dir / name


def sim_config(details, seed, keep_snapshots=True):
    """SimConfig from a checked [simulation] section."""

    samples = None

    if details["init"] == "samples":
        if details["samples"] is None:
            raise ConfigError("[simulation] init = samples needs 'samples'")
        try:
            samples = np.loadtxt(details["samples"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as error:
            raise ConfigError(
                f"cannot read sample file '{details['samples']}': {error}"
            )

    return SimConfig(
        n_particles=details["n_particles"],
        dt=details["dt"],
        t_end=details["t_end"],
        seed=seed,
        record_every=details["record_every"],
        init=details["init"],
        sx=details["sx"],
        sv=details["sv"],
        mx=details["mx"],
        mv=details["mv"],
        samples=samples,
        keep_snapshots=keep_snapshots,
    )


def bandwidth(value):
    try:
        return float(value)
    except ValueError:
        return value


def estimate(ensemble, grid, details):
    return density.kde_estimate(ensemble, grid, bandwidth(details["bandwidth"]))


def gaussian_density(grid, details):
    """N(mx, sx^2) x N(mv, sv^2) on the grid from a checked section."""

    mx, sx, mv, sv = details["mx"], details["sx"], details["mv"], details["sv"]

    def function(xx, vv):
        return np.exp(-0.5 * ((xx - mx) / sx) ** 2 - 0.5 * ((vv - mv) / sv) ** 2)

    return density.PhaseDensity.from_function(grid, function)


def identity_residuals(times, F, I):
    """Centred dF/dt at the interior records and |dF/dt + I| there."""

    times, F, I = (np.asarray(a, dtype=float) for a in (times, F, I))

    if len(times) < 3:
        raise ConfigError("need at least three recorded times for dF/dt")

    dF_dt = (F[2:] - F[:-2]) / (times[2:] - times[:-2])
    residual = np.abs(dF_dt + I[1:-1])

    return times[1:-1], dF_dt, I[1:-1], residual


def worst_ratio(residual, scale, rel, abs_):
    """max residual / (rel scale + abs), <= 1 when every point passes."""
    return float(np.max(np.asarray(residual) / (rel * np.asarray(scale) + abs_)))
