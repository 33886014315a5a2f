"""The writing module contains the code that writes the artifacts of a run.

Every table is a CSV file written with numpy.savetxt and comes with a small
gnuplot script that plots it. A manifest records the command, the seed, the
checksum of the configuration file, the package versions and the checksum of
every artifact, so two runs with the same inputs can be compared file by
file.
"""
import configparser
import platform

import lmfit
import numpy as np
import scipy

from vfplab import __version__
from vfplab import util
from vfplab.density import GridSpec
from vfplab.density import PhaseDensity
from vfplab.errors import ConfigError

FMT = "%.12e"

LINES = """\
set datafile separator ","
set key autotitle columnhead
set xlabel "{xlabel}"
set terminal pdfcairo
set output "{stem}.pdf"
plot for [col={first}:{last}] "{name}" using 1:col with lines
"""

POINTS = """\
set datafile separator ","
set key autotitle columnhead
set xlabel "x"
set ylabel "v"
set terminal pdfcairo
set output "{stem}.pdf"
plot "{name}" using {x}:{v} with dots
"""

MAP = """\
set datafile separator ","
set view map
set xlabel "x"
set ylabel "v"
set terminal pdfcairo
set output "{stem}.pdf"
splot "{name}" using 1:2:3 with pm3d notitle
"""


class ArtifactWriter:
    """Write the CSV files, plotting scripts and manifest of one invocation."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def register(self, path):
        self.files.append(path)
        print(f"  * {path}")

    def _script(self, name, template, **kwargs):
        stem = name.rsplit(".", 1)[0]
        path = self.out_dir / f"{stem}.gp"
        path.write_text(template.format(stem=stem, name=name, **kwargs))
        self.register(path)

    def table(self, name, columns, rows, plot="lines"):
        """Write rows under a header of columns; plot the columns 2.. against
        the first one."""

        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        path = self.out_dir / name
        np.savetxt(
            path, rows, fmt=FMT, delimiter=",", header=",".join(columns), comments=""
        )
        self.register(path)

        if plot == "lines":
            self._script(
                name, LINES, xlabel=columns[0], first=2, last=len(columns)
            )

        return path

    def trajectories(self, name, store, stride=1):
        """t,particle_id,x...,v... rows of every recorded snapshot."""

        dim = store.positions.shape[2]
        if dim == 1:
            coordinates = ["x", "v"]
        else:
            coordinates = [f"x{i}" for i in range(1, dim + 1)]
            coordinates += [f"v{i}" for i in range(1, dim + 1)]

        columns = ["t", "particle_id"] + coordinates
        path = self.table(name, columns, store.rows(stride), plot=None)
        self._script(name, POINTS, x=3, v=3 + dim)

        return path

    def density(self, name, f):
        """x,v,f rows, one blank line between x-columns (gnuplot grid form)."""

        path = self.out_dir / name
        xx, vv = f.grid.mesh()

        with open(path, "w") as handle:
            handle.write("x,v,f\n")
            for block in zip(xx, vv, f.values):
                np.savetxt(handle, np.column_stack(block), fmt=FMT, delimiter=",")
                handle.write("\n")

        self.register(path)
        self._script(name, MAP)

        return path

    def text(self, name, content):
        path = self.out_dir / name
        path.write_text(content)
        self.register(path)
        return path

    def manifest(self, command, settings, seed):
        """manifest.cfg: inputs, versions and artifact checksums."""

        manifest = configparser.ConfigParser()
        manifest.optionxform = str
        manifest["run"] = {
            "command": command,
            "config": settings.filename.name,
            "config_sha256": settings.digest,
            "seed": str(seed),
        }
        manifest["versions"] = {
            "vfplab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "lmfit": lmfit.__version__,
        }
        manifest["artifacts"] = {
            path.name: util.sha256_of(path) for path in self.files
        }

        path = self.out_dir / "manifest.cfg"

        with open(path, "w") as handle:
            manifest.write(handle)

        print(f"  * {path}")

        return path


def read_density(filename):
    """PhaseDensity from an x,v,f file on a uniform cell-centred grid."""

    try:
        table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as error:
        raise ConfigError(f"cannot read density file '{filename}': {error}")

    if table.shape[1] != 3:
        raise ConfigError(f"'{filename}' must have three columns: x, v, f")

    x, v = np.unique(table[:, 0]), np.unique(table[:, 1])

    if len(table) != len(x) * len(v):
        raise ConfigError(f"'{filename}' is not a full tensor grid")

    dx, dv = np.diff(x), np.diff(v)

    if not (np.allclose(dx, dx[0]) and np.allclose(dv, dv[0])):
        raise ConfigError(f"'{filename}' is not on a uniform grid")

    grid = GridSpec(
        x_min=x[0] - 0.5 * dx[0],
        x_max=x[-1] + 0.5 * dx[0],
        v_min=v[0] - 0.5 * dv[0],
        v_max=v[-1] + 0.5 * dv[0],
        nx=len(x),
        nv=len(v),
    )

    order = np.lexsort((table[:, 1], table[:, 0]))
    values = table[order, 2].reshape(grid.shape)

    return PhaseDensity(grid, values, normalize=True)
