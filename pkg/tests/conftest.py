import numpy as np
import pytest

from vfplab.density import GridSpec
from vfplab.density import PhaseDensity
from vfplab.parameters import derived_constants
from vfplab.potentials import GaussianKernel
from vfplab.potentials import PotentialSpec
from vfplab.potentials import Quadratic
from vfplab.potentials import Zero


@pytest.fixture
def params():
    return derived_constants(m=1.0, gamma=1.0, kB_TB=1.0)


@pytest.fixture
def harmonic():
    """U = x^2 / 2, no interaction: Gibbs measure N(0, 1) x N(0, 1)."""
    return PotentialSpec(U=Quadratic(0.5), K=Zero(), kappa_U=0.5)


@pytest.fixture
def interacting():
    return PotentialSpec(U=Quadratic(0.5), K=GaussianKernel(0.5, 1.0), kappa_U=0.5)


@pytest.fixture
def grid():
    return GridSpec.symmetric(8.0, 8.0, 96, 96)


def gaussian(grid, mx=0.0, sx=1.0, mv=0.0, sv=1.0):
    def function(xx, vv):
        return np.exp(-0.5 * ((xx - mx) / sx) ** 2 - 0.5 * ((vv - mv) / sv) ** 2)

    return PhaseDensity.from_function(grid, function)


@pytest.fixture
def gibbs(grid):
    return gaussian(grid)


@pytest.fixture
def write_cfg(tmp_path):
    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
