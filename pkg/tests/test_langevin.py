import dataclasses

import numpy as np
import pytest

from vfplab import langevin
from vfplab import stationary
from vfplab.ensemble import ParticleEnsemble
from vfplab.errors import ConfigError
from vfplab.langevin import NoiseStream
from vfplab.langevin import SimConfig
from vfplab.parameters import derived_constants
from vfplab.potentials import PotentialSpec
from vfplab.potentials import Zero


def test_noise_does_not_depend_on_ensemble_size():
    stream = NoiseStream(11)
    small = stream.normals(5, np.arange(3), 1)
    large = stream.normals(5, np.arange(100), 1)
    np.testing.assert_array_equal(small, large[:3])


def test_noise_changes_with_step():
    stream = NoiseStream(11)
    assert not np.array_equal(stream.normals(0, [0], 1), stream.normals(1, [0], 1))


def test_noise_is_standard_normal():
    draws = NoiseStream(0).normals(0, np.arange(50000), 1)
    assert abs(np.mean(draws)) < 0.02
    assert np.std(draws) == pytest.approx(1.0, abs=0.02)


def test_deterministic_step_without_noise():
    params = dataclasses.replace(derived_constants(1.0, 1.0, 1.0), gamma=0.5, sigma=0.0)
    spec = PotentialSpec(U=Zero(), K=Zero())
    ensemble = ParticleEnsemble([0.0], [1.0])
    langevin.step(ensemble, spec, params, 0.1)
    assert ensemble.positions[0, 0] == pytest.approx(0.1)
    assert ensemble.velocities[0, 0] == pytest.approx(np.exp(-0.05))
    assert ensemble.steps == 1


def test_simulation_is_reproducible(harmonic, params):
    config = SimConfig(n_particles=50, dt=0.01, t_end=0.1, seed=5, record_every=5)
    first, _ = langevin.simulate(config, harmonic, params)
    second, _ = langevin.simulate(config, harmonic, params)
    assert len(first) == 3
    np.testing.assert_array_equal(first.positions, second.positions)


def test_harmonic_moments_follow_exact_solution(harmonic, params):
    config = SimConfig(
        n_particles=20000, dt=0.01, t_end=1.0, seed=1, record_every=25, sx=1.5, sv=0.5
    )
    store, _ = langevin.simulate(config, harmonic, params)
    exact = stationary.kramers_moments(
        params, 0.5, [0.0, 0.0], np.diag([2.25, 0.25]), store.times
    )
    np.testing.assert_allclose(store.moments[:, 0], exact.values[:, 2], rtol=0.05)
    np.testing.assert_allclose(store.moments[:, 1], exact.values[:, 4], rtol=0.05)


def test_interacting_simulation_records_history(interacting, params):
    config = SimConfig(n_particles=200, dt=0.01, t_end=0.2, record_every=10)
    store, history = langevin.simulate(config, interacting, params)
    assert history.interaction_on
    np.testing.assert_allclose(history.times, store.times)


def test_pullback_at_time_zero_is_identity(interacting, params):
    config = SimConfig(n_particles=100, dt=0.01, t_end=0.1, record_every=5)
    store, history = langevin.simulate(config, interacting, params)
    pulled = langevin.pulled_back_trajectories(
        store, interacting, params, history, dt=1e-3, threads=2
    )
    np.testing.assert_array_equal(pulled.positions[0], store.positions[0])
    assert pulled.positions.shape == store.positions.shape


def test_trajectory_energies_shapes(harmonic, params):
    config = SimConfig(n_particles=30, dt=0.01, t_end=0.05, record_every=1)
    store, _ = langevin.simulate(config, harmonic, params)
    h_full, H = langevin.trajectory_energies(store, harmonic, params)
    assert h_full.shape == (6, 30)
    assert H.shape == (6,)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(n_particles=1, dt=0.01, t_end=1.0)
    with pytest.raises(ConfigError):
        SimConfig(n_particles=10, dt=0.01, t_end=1.0, init="uniform")
    with pytest.raises(ConfigError):
        SimConfig(n_particles=10, dt=0.01, t_end=1.0, init="samples")
    with pytest.raises(ConfigError, match="record_every must be >= 1"):
        SimConfig(n_particles=10, dt=0.01, t_end=1.0, record_every=0)


def test_store_rows(harmonic, params):
    config = SimConfig(n_particles=10, dt=0.01, t_end=0.02, record_every=1)
    store, _ = langevin.simulate(config, harmonic, params)
    rows = store.rows(stride=2)
    assert rows.shape == (3 * 5, 4)
    np.testing.assert_array_equal(rows[:5, 1], [0, 2, 4, 6, 8])


def test_velocity_update_has_the_exact_ornstein_uhlenbeck_law(params):
    spec = PotentialSpec(U=Zero(), K=Zero())
    n = 50000
    ensemble = ParticleEnsemble(np.zeros(n), np.ones(n), seed=7)
    langevin.step(ensemble, spec, params, 0.5)
    v = ensemble.velocities[:, 0]
    variance = params.sigma ** 2 * (1.0 - np.exp(-1.0)) / 2.0
    assert np.mean(v) == pytest.approx(np.exp(-0.5), abs=0.015)
    assert np.var(v) == pytest.approx(variance, rel=0.03)


def test_noise_rows_follow_stream_ids():
    stream = NoiseStream(3)
    forward = stream.normals(2, [0, 1, 2, 3], 2)
    shuffled = stream.normals(2, [3, 1, 0, 2], 2)
    np.testing.assert_array_equal(shuffled, forward[[3, 1, 0, 2]])


def test_pullback_does_not_depend_on_threads(interacting, params):
    config = SimConfig(n_particles=60, dt=0.01, t_end=0.1, seed=4, record_every=2)
    store, history = langevin.simulate(config, interacting, params)
    serial = langevin.pulled_back_trajectories(
        store, interacting, params, history, dt=1e-3, threads=1
    )
    threaded = langevin.pulled_back_trajectories(
        store, interacting, params, history, dt=1e-3, threads=3
    )
    np.testing.assert_array_equal(serial.positions, threaded.positions)
    np.testing.assert_array_equal(serial.velocities, threaded.velocities)
