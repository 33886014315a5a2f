"""The ensemble module contains the phase-space primitives: single (or
batched) phase points and the weighted particle ensemble approximating the
law of the mean-field Langevin process."""
import dataclasses

import numpy as np

from vfplab import util
from vfplab.errors import DomainError
from vfplab.errors import StateError


@dataclasses.dataclass(frozen=True)
class PhasePoint:
    """Position x and velocity v, shape (d,) or batched (n, d)."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, ndmin=1)
        v = np.array(self.v, dtype=float, ndmin=1)
        if x.shape != v.shape:
            raise DomainError(f"x and v shapes differ: {x.shape} vs {v.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DomainError("phase point has non-finite coordinates")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.x.shape[-1]

    @property
    def batched(self):
        return self.x.ndim > 1

    def as_array(self):
        """z = (x, v) concatenated along the last axis."""
        return np.concatenate([self.x, self.v], axis=-1)

    @classmethod
    def from_array(cls, z):
        z = np.asarray(z, dtype=float)
        dim = z.shape[-1] // 2
        return cls(z[..., :dim], z[..., dim:])


class ParticleEnsemble:
    """N equally weighted particles with per-particle RNG stream ids.

    stream_ids[i] fixes where particle i reads its noise inside the block
    drawn for a step; steps counts the steps taken so far.

    Only vfplab.langevin mutates an ensemble in place.
    """

    def __init__(
        self, positions, velocities, time=0.0, seed=0, stream_ids=None, steps=0
    ):
        positions = _as_columns(positions)
        velocities = _as_columns(velocities)

        if positions.shape != velocities.shape:
            raise DomainError(
                f"positions {positions.shape} and velocities {velocities.shape} differ"
            )

        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(velocities))):
            raise DomainError("ensemble has non-finite coordinates")

        if stream_ids is None:
            stream_ids = np.arange(len(positions), dtype=np.int64)

        self.positions = positions
        self.velocities = velocities
        self.time = float(time)
        self.seed = int(seed)
        self.stream_ids = np.asarray(stream_ids, dtype=np.int64)
        self.steps = int(steps)

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        for x, v in zip(self.positions, self.velocities):
            yield PhasePoint(x, v)

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def weights(self):
        n = len(self)
        return np.full(n, 1.0 / n)

    @property
    def particles(self):
        return PhasePoint(self.positions, self.velocities)

    def copy(self):
        return ParticleEnsemble(
            self.positions.copy(),
            self.velocities.copy(),
            time=self.time,
            seed=self.seed,
            stream_ids=self.stream_ids.copy(),
            steps=self.steps,
        )

    def moments(self):
        """Empirical E|X|^2, E|V|^2, E|X|^4, E|V|^4."""
        x2 = np.sum(self.positions ** 2, axis=1)
        v2 = np.sum(self.velocities ** 2, axis=1)
        return np.array(
            [
                util.pairwise_mean(x2),
                util.pairwise_mean(v2),
                util.pairwise_mean(x2 ** 2),
                util.pairwise_mean(v2 ** 2),
            ]
        )

    @classmethod
    def from_gaussian(cls, n, dim=1, sx=1.0, sv=1.0, mx=0.0, mv=0.0, seed=0):
        """Independent N(mx, sx^2) positions and N(mv, sv^2) velocities."""
        if n < 1:
            raise DomainError(f"ensemble size must be positive, got {n}")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        positions = mx + sx * rng.standard_normal((n, dim))
        velocities = mv + sv * rng.standard_normal((n, dim))
        return cls(positions, velocities, seed=seed)

    @classmethod
    def from_samples(cls, samples, seed=0):
        """Build from an (N, 2d) array of rows x..., v..."""
        samples = np.array(samples, dtype=float, ndmin=2)
        if samples.shape[1] % 2:
            raise DomainError("sample rows must hold x... then v... (even width)")
        dim = samples.shape[1] // 2
        return cls(samples[:, :dim], samples[:, dim:], seed=seed)


def mean_field_force(spec, ensemble, query_x):
    """Empirical mean-field force (1/N) sum_j grad K(query_x - x_j).

    A single query of shape (d,) returns (d,); a batch (Q, d) returns (Q, d).
    """

    if len(ensemble) == 0:
        raise StateError("mean_field_force called on an empty ensemble")

    query = np.asarray(query_x, dtype=float)
    single = query.ndim <= 1
    query = np.atleast_2d(query).reshape(-1, ensemble.dim)

    force = spec.K.mean_field(query, ensemble.positions)

    return force[0] if single else force


def _as_columns(values):
    # A flat array is read as N one-dimensional particles.
    values = np.array(values, dtype=float)
    if values.ndim == 0:
        values = values.reshape(1, 1)
    elif values.ndim == 1:
        values = values[:, None]
    return values
