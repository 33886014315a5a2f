"""The langevin module contains the interacting particle simulation of the
mean-field Langevin equation.

Each step is kick / drift / exact Ornstein-Uhlenbeck velocity update / kick.
Gaussian increments are counter based: the block for a step is keyed by
(seed, step index) and particle i reads the words at its stream id, so a
particle's noise does not depend on N or on the order of evaluation.
"""
import concurrent.futures
import dataclasses
import math

import numpy as np

from vfplab import hamiltonian
from vfplab import util
from vfplab.ensemble import ParticleEnsemble
from vfplab.ensemble import PhasePoint
from vfplab.errors import BlowUpError
from vfplab.errors import ConfigError
from vfplab.errors import DomainError


class NoiseStream:
    """Counter-based standard normal increments."""

    def __init__(self, seed):
        if seed < 0:
            raise DomainError(f"seeds must be nonnegative, got {seed}")
        self.seed = int(seed)

    def normals(self, step, stream_ids, dim):
        """Array (len(stream_ids), dim) of N(0, 1) draws for one step."""
        stream_ids = np.asarray(stream_ids, dtype=np.int64)
        n_streams = int(stream_ids.max()) + 1 if len(stream_ids) else 0
        key = (self.seed % 2 ** 64) + (int(step) << 64)
        generator = np.random.Generator(np.random.Philox(key=key))
        return generator.standard_normal((n_streams, dim))[stream_ids]


@dataclasses.dataclass
class SimConfig:
    n_particles: int
    dt: float
    t_end: float
    seed: int = 0
    record_every: int = 1
    init: str = "gaussian"
    sx: float = 1.0
    sv: float = 1.0
    mx: float = 0.0
    mv: float = 0.0
    samples: np.ndarray = None
    x_grid: np.ndarray = None
    keep_snapshots: bool = True

    def __post_init__(self):
        if self.init == "samples" and self.samples is not None:
            self.n_particles = len(self.samples)
        if self.n_particles < 2:
            raise ConfigError("[simulation] n_particles must be >= 2")
        if self.dt <= 0.0:
            raise ConfigError(f"[simulation] dt must be > 0, got {self.dt}")
        if self.t_end <= 0.0:
            raise ConfigError(f"[simulation] t_end must be > 0, got {self.t_end}")
        if self.record_every < 1:
            raise ConfigError("[simulation] record_every must be >= 1")
        if self.init not in ("gaussian", "samples"):
            raise ConfigError(f"[simulation] unknown init '{self.init}'")
        if self.init == "samples" and self.samples is None:
            raise ConfigError("[simulation] init = samples needs a sample file")

    @property
    def n_steps(self):
        return int(math.floor(self.t_end / self.dt + 1e-9))

    @property
    def n_records(self):
        return self.n_steps // self.record_every + 1

    def initial_ensemble(self, dim=1):
        if self.init == "samples":
            ensemble = ParticleEnsemble.from_samples(self.samples, seed=self.seed)
            if ensemble.dim != dim:
                raise ConfigError(
                    f"sample file holds d = {ensemble.dim} data, expected d = {dim}"
                )
            return ensemble
        return ParticleEnsemble.from_gaussian(
            self.n_particles,
            dim=dim,
            sx=self.sx,
            sv=self.sv,
            mx=self.mx,
            mv=self.mv,
            seed=self.seed,
        )


class TrajectoryStore:
    """Recorded times, particle snapshots and empirical moments."""

    def __init__(self, times, positions, velocities, moments, mean_velocity):
        self.times = np.asarray(times, dtype=float)
        self.positions = positions
        self.velocities = velocities
        self.moments = np.asarray(moments, dtype=float)
        self.mean_velocity = np.asarray(mean_velocity, dtype=float)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        for index in range(len(self)):
            yield self.snapshot(index)

    @property
    def has_snapshots(self):
        return self.positions is not None

    def snapshot(self, index):
        if not self.has_snapshots:
            raise DomainError("this TrajectoryStore keeps moments only")
        return ParticleEnsemble(
            self.positions[index], self.velocities[index], time=self.times[index]
        )

    def index_of(self, t):
        return int(np.argmin(np.abs(self.times - t)))

    def rows(self, stride=1):
        """(t, particle_id, x..., v...) rows for CSV export."""
        n_particles = self.positions.shape[1]
        ids = np.arange(n_particles)[::stride]
        blocks = []
        for t, x, v in zip(self.times, self.positions, self.velocities):
            block = np.column_stack(
                [np.full(len(ids), t), ids, x[ids], v[ids]]
            )
            blocks.append(block)
        return np.concatenate(blocks)


def _force(spec, positions):
    force = spec.U.gradient(positions)
    if not spec.interaction_off:
        force = force + spec.K.mean_field(positions, positions)
    return force


def step(ensemble, spec, params, dt, rng=None):
    """Advance the ensemble in place by one kick/drift/OU/kick step."""

    if rng is None:
        rng = NoiseStream(ensemble.seed)

    m = params.m
    x, v = ensemble.positions, ensemble.velocities

    v = v - 0.5 * dt * _force(spec, x) / m
    x = x + dt * v

    decay = math.exp(-params.gamma * dt / m)
    if params.gamma > 0.0:
        variance = -math.expm1(-2.0 * params.gamma * dt / m) * m / (2.0 * params.gamma)
        spread = params.sigma * math.sqrt(variance)
    else:
        spread = params.sigma * math.sqrt(dt)

    if spread > 0.0:
        xi = rng.normals(ensemble.steps, ensemble.stream_ids, ensemble.dim)
        v = decay * v + spread * xi
    else:
        v = decay * v

    v = v - 0.5 * dt * _force(spec, x) / m

    ensemble.time += dt
    ensemble.steps += 1

    finite = np.isfinite(x).all(axis=1) & np.isfinite(v).all(axis=1)
    if not finite.all():
        raise BlowUpError(int(np.flatnonzero(~finite)[0]), ensemble.time)

    ensemble.positions = x
    ensemble.velocities = v

    return ensemble


def default_x_grid(positions, points=257, n_std=8.0):
    """Tabulation grid for the mean field: mean +/- n_std standard deviations."""
    center, spread = np.mean(positions), np.std(positions)
    spread = spread if spread > 0.0 else 1.0
    return np.linspace(center - n_std * spread, center + n_std * spread, points)


def simulate(config, spec, params, verbose=False):
    """Run the particle system to t_end and record snapshots and history."""

    ensemble = config.initial_ensemble(params.dim)
    rng = NoiseStream(config.seed)

    tabulate = not spec.interaction_off and params.dim == 1
    x_grid = None
    if tabulate:
        x_grid = config.x_grid
        if x_grid is None:
            x_grid = default_x_grid(ensemble.positions)

    times, moments, mean_velocity, fields = [], [], [], []
    positions, velocities = [], []

    def record():
        times.append(ensemble.time)
        moments.append(ensemble.moments())
        mean_velocity.append(util.pairwise_mean(ensemble.velocities, axis=0))
        if config.keep_snapshots:
            positions.append(ensemble.positions.copy())
            velocities.append(ensemble.velocities.copy())
        if tabulate:
            fields.append(spec.K.mean_field(x_grid[:, None], ensemble.positions)[:, 0])

    record()

    for k in range(1, config.n_steps + 1):
        step(ensemble, spec, params, config.dt, rng)
        if k % config.record_every == 0:
            record()
            if verbose:
                print(f"  t = {ensemble.time:8.4f}  E|X|^2 = {moments[-1][0]:.4e}")

    store = TrajectoryStore(
        times,
        np.array(positions) if config.keep_snapshots else None,
        np.array(velocities) if config.keep_snapshots else None,
        moments,
        mean_velocity,
    )

    if tabulate:
        history = hamiltonian.ForceFieldHistory(times, x_grid, np.array(fields))
    else:
        history = hamiltonian.ForceFieldHistory(times)

    return store, history


def pulled_back_trajectories(store, spec, params, history, dt=1e-3, threads=1):
    """Apply Phi_{-t} to every snapshot; the result approximates mu_t."""

    def pull(index):
        t = store.times[index]
        point = PhasePoint(store.positions[index], store.velocities[index])
        record = hamiltonian.integrate_flow(point, -t, spec, params, history, dt)
        return record.position, record.velocity

    indexes = range(len(store))

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(pull, indexes))
    else:
        results = [pull(index) for index in indexes]

    positions = np.array([x for x, _ in results])
    velocities = np.array([v for _, v in results])
    moments = [
        ParticleEnsemble(x, v).moments() for x, v in zip(positions, velocities)
    ]
    mean_velocity = [util.pairwise_mean(v, axis=0) for v in velocities]

    return TrajectoryStore(store.times, positions, velocities, moments, mean_velocity)


def trajectory_energies(store, spec, params):
    """Per-particle h_f and macroscopic H_f = E[h-check_f] at every snapshot.

    Returns (h_full, H) with shapes (T, N) and (T,).
    """
    m = params.m
    h_full, total = [], []

    for x, v in zip(store.positions, store.velocities):
        kinetic = 0.5 * np.sum(v ** 2, axis=1)
        confinement = spec.U.value(x) / m
        interaction = spec.K.convolve(x, x) / m
        h_full.append(kinetic + confinement + interaction)
        total.append(util.pairwise_mean(kinetic + confinement + 0.5 * interaction))

    return np.array(h_full), np.array(total)
