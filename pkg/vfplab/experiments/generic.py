"""
GENERIC structure
=================

Splits the grid right-hand side of the kinetic equation into its reversible
and irreversible parts,

  d_t f = L(f) h_f - J(f) (ln f + beta m h_f)

with the Poisson operator L(f) phi = -{f, phi} and the Onsager operator
J(f) psi = -div(A/2 f grad psi), and compares the assembly with the direct
discretization on random smooth densities. The structural properties of the
two operators are exercised on random smooth test fields: antisymmetry of the
pairing int psi L phi + phi L psi, symmetry and positivity of J.


Sections
--------

  * [params], [confinement], [interaction], [grid]
  * [pde]     accuracy (stencil order)
  * [checks]  generic_rhs, generic_poisson, generic_operators


Artifacts
---------

  * generic.csv  k,rhs_difference,poisson_antisymmetry,onsager_symmetry,
                 onsager_min_form

"""
import numpy as np

from vfplab import generic
from vfplab import kinetic
from vfplab import util
from vfplab.density import PhaseDensity
from vfplab.errors import ConfigError
from vfplab.experiments.base import Experiment

COLUMNS = [
    "k",
    "rhs_difference",
    "poisson_antisymmetry",
    "onsager_symmetry",
    "onsager_min_form",
]
N_DENSITIES = 5
N_FIELDS = 3


def random_density(grid, rng):
    """Smooth positive density, Gaussian tails well inside the grid."""

    xx, vv = grid.mesh()
    x_scale = 0.15 * (grid.x_max - grid.x_min)
    v_scale = 0.15 * (grid.v_max - grid.v_min)
    cx = 0.5 * (grid.x_max + grid.x_min) + 0.2 * x_scale * rng.uniform(-1.0, 1.0)
    cv = 0.5 * (grid.v_max + grid.v_min) + 0.2 * v_scale * rng.uniform(-1.0, 1.0)
    sx, sv = rng.uniform(0.6, 1.0, size=2)
    a, b, c, d = rng.normal(size=4)
    ripple = 0.3 * np.sin(a * xx / x_scale + b) * np.cos(c * vv / v_scale + d)
    exponent = (
        -0.5 * ((xx - cx) / (sx * x_scale)) ** 2
        - 0.5 * ((vv - cv) / (sv * v_scale)) ** 2
        + ripple
    )
    return PhaseDensity(grid, np.exp(exponent), normalize=True)


class Generic(Experiment):
    def run(self):
        if self.params.dim != 1:
            raise ConfigError("[params] the generic pipeline needs dim = 1")

        util.header1("GENERIC structure")

        grid = self.settings.grid
        accuracy = self.settings["pde"]["accuracy"]
        rng = np.random.default_rng(self.seed)
        rows = []

        for k in range(N_DENSITIES):
            f = random_density(grid, rng)
            assembled = generic.assemble_generic_rhs(
                f, self.spec, self.params, accuracy
            )
            direct = kinetic.vfp_rhs(f, self.spec, self.params, accuracy)
            difference = float(np.max(np.abs(assembled - direct)))
            residuals = generic.generic_residuals(
                f, self.spec, self.params, N_FIELDS, self.seed + k, accuracy
            )
            rows.append(
                [
                    k,
                    difference,
                    residuals["poisson_antisymmetry"],
                    residuals["onsager_symmetry"],
                    residuals["onsager_min_form"],
                ]
            )

            if self.verbose:
                print(f"  density {k}  max |assembled - direct| = {difference:.3e}")

        rows = np.array(rows)
        self.writer.table("generic.csv", COLUMNS, rows, plot=None)

        util.print_items(
            [
                ("max |assembled - direct|", float(np.max(rows[:, 1]))),
                ("poisson antisymmetry", float(np.max(rows[:, 2]))),
                ("onsager symmetry", float(np.max(rows[:, 3]))),
                ("onsager min form", float(np.min(rows[:, 4]))),
            ]
        )

        limits = self.limits
        self.check("assembled rhs", np.max(rows[:, 1]), limits["generic_rhs"])
        self.check(
            "poisson antisymmetry", np.max(rows[:, 2]), limits["generic_poisson"]
        )
        self.check("onsager symmetry", np.max(rows[:, 3]), limits["generic_operators"])
        self.check(
            "onsager negativity", -np.min(rows[:, 4]), limits["generic_operators"]
        )

        if self.plot:
            from vfplab import plotting

            plotting.plot_run(
                self.plot_file("generic.pdf"), series=[("generic", COLUMNS, rows)]
            )
