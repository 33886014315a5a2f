"""The parameters module contains the physical constants of the model.

ModelParams holds the mass m, the friction gamma and the bath temperature
energy kB_TB together with the derived inverse temperature beta = 1/kB_TB and
the noise amplitude sigma = sqrt(2 gamma / (beta m^2)).
"""
import dataclasses
import math

import numpy as np

from vfplab.errors import DomainError


@dataclasses.dataclass(frozen=True)
class ModelParams:
    m: float
    gamma: float
    kB_TB: float
    beta: float
    sigma: float
    dim: int = 1

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")

    @property
    def friction_rate(self):
        """gamma / m, the velocity relaxation rate."""
        return self.gamma / self.m

    @property
    def diffusion(self):
        """sigma^2 / 2 = gamma / (beta m^2), the velocity diffusion coefficient."""
        return 0.5 * self.sigma ** 2

    @property
    def beta_m(self):
        return self.beta * self.m

    @property
    def noise_matrix(self):
        """A = G G^T restricted to one position and one velocity axis."""
        return np.diag([0.0, self.sigma ** 2])

    def reversible(self):
        """Copy with friction and noise switched off (pure transport runs)."""
        return dataclasses.replace(self, gamma=0.0, sigma=0.0)

    def as_dict(self):
        return dataclasses.asdict(self)


def derived_constants(m, gamma, kB_TB, dim=1):
    """Build ModelParams from the three physical inputs."""

    names = ("m", "gamma", "kB_TB")

    for name, value in zip(names, (m, gamma, kB_TB)):
        if not np.isfinite(value) or value <= 0.0:
            raise DomainError(f"{name} must be strictly positive, got {value}")

    m, gamma, kB_TB = float(m), float(gamma), float(kB_TB)
    beta = 1.0 / kB_TB
    sigma = _snap_sigma(math.sqrt(2.0 * gamma / (beta * m ** 2)), m, gamma, beta)

    return ModelParams(m=m, gamma=gamma, kB_TB=kB_TB, beta=beta, sigma=sigma, dim=dim)


def _snap_sigma(sigma, m, gamma, beta):
    # Pick, among the neighbouring doubles, the one for which
    # sigma**2 * beta * m**2 reproduces 2 gamma best.
    target = 2.0 * gamma
    candidates = [sigma]

    for direction in (np.inf, -np.inf):
        value = sigma
        for _ in range(3):
            value = float(np.nextafter(value, direction))
            candidates.append(value)

    return min(candidates, key=lambda s: abs(s ** 2 * beta * m ** 2 - target))
