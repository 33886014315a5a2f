"""vfplab is a numerical laboratory for the nonlinear Vlasov-Fokker-Planck
equation and its mean-field Langevin particle system.

It simulates both descriptions, estimates phase-space densities, evaluates
the free energy and its dissipation, and checks the reversible/irreversible
(GENERIC) split, the pullback along the Hamiltonian flow and the partial HWI
inequality on desk-scale problems.

"""
from pkg_resources import DistributionNotFound
from pkg_resources import get_distribution

__all__ = ["__version__"]

try:
    __version__ = get_distribution(__name__).version
except DistributionNotFound:
    # package is not installed
    __version__ = "unknown"
