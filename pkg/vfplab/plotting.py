"""Optional PDF figures of the run artifacts (--plot)."""
import contextlib

import matplotlib

matplotlib.use("Agg")

from matplotlib import pyplot as plt  # noqa: E402
from matplotlib.backends import backend_pdf  # noqa: E402

METADATA = {"CreationDate": None, "Creator": "vfplab"}


def _series_figure(columns, rows, title):
    fig, axis = plt.subplots(figsize=(7, 4))
    for index, label in enumerate(columns[1:], start=1):
        axis.plot(rows[:, 0], rows[:, index], label=label)
    axis.set_xlabel(columns[0])
    axis.set_title(title)
    axis.legend()
    axis.grid(True)
    fig.tight_layout()
    return fig


def _density_figure(f, title):
    fig, axis = plt.subplots(figsize=(6, 5))
    image = axis.pcolormesh(
        f.grid.x_edges, f.grid.v_edges, f.values.T, shading="flat", cmap="viridis"
    )
    fig.colorbar(image, ax=axis, label="f")
    axis.set_xlabel("x")
    axis.set_ylabel("v")
    axis.set_title(title)
    fig.tight_layout()
    return fig


def plot_run(filename, series=(), densities=()):
    """One page per table in series ((title, columns, rows)) and per density
    in densities ((title, PhaseDensity))."""

    print(f"  * {filename}")

    with contextlib.ExitStack() as stack:
        file_pdf = stack.enter_context(
            backend_pdf.PdfPages(filename, metadata=METADATA)
        )

        for title, columns, rows in series:
            fig = _series_figure(columns, rows, title)
            file_pdf.savefig(fig)
            plt.close(fig)

        for title, f in densities:
            fig = _density_figure(f, title)
            file_pdf.savefig(fig)
            plt.close(fig)

    return filename
