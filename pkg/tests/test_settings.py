import pathlib

import pytest

from vfplab import potentials
from vfplab import settings
from vfplab.errors import ConfigError

CONFIGS = pathlib.Path(__file__).parents[1] / "configs"

MINIMAL = """\
[params]
m = 1.0
gamma = 2.0
kB_TB = 0.5
"""


def test_shipped_configurations():
    harmonic = settings.load_settings(CONFIGS / "harmonic.cfg")
    assert isinstance(harmonic.spec.U, potentials.Quadratic)
    assert harmonic.spec.interaction_off
    assert harmonic.spec.kappa_U == pytest.approx(0.5)
    assert harmonic.grid.nx == 128
    assert len(harmonic.digest) == 64

    double_well = settings.load_settings(CONFIGS / "double_well.cfg")
    assert isinstance(double_well.spec.U, potentials.QuarticDoubleWell)


def test_defaults(write_cfg):
    config = settings.load_settings(write_cfg(MINIMAL))
    assert config.params.beta == pytest.approx(2.0)
    assert config["simulation"]["n_particles"] == 10000
    assert config["pde"]["scheme"] == "central"
    assert config["hwi"]["pairs"] == ()
    assert config["checks"]["generic_rhs"] == 1e-10
    assert isinstance(config.spec.U, potentials.Zero)
    assert config.spec.kappa_U == 0.0


def test_unknown_key_names_the_line(write_cfg):
    with pytest.raises(ConfigError, match=r"run.cfg:5: \[params\] unknown key 'mass'"):
        settings.load_settings(write_cfg(MINIMAL + "mass = 2.0\n"))


def test_unknown_section(write_cfg):
    with pytest.raises(ConfigError, match=r"unknown section \[solver\]"):
        settings.load_settings(write_cfg(MINIMAL + "[solver]\ndt = 1\n"))


def test_missing_params_section(write_cfg):
    with pytest.raises(ConfigError, match="missing section"):
        settings.load_settings(write_cfg("[grid]\nnx = 32\n"))


def test_missing_required_key(write_cfg):
    with pytest.raises(ConfigError, match="missing required key"):
        settings.load_settings(write_cfg("[params]\nm = 1.0\ngamma = 1.0\n"))


def test_invalid_value(write_cfg):
    text = MINIMAL + "[simulation]\nn_particles = many\n"
    with pytest.raises(ConfigError, match="is not a valid int"):
        settings.load_settings(write_cfg(text))


def test_nonpositive_physical_constant(write_cfg):
    with pytest.raises(ConfigError, match=r"\[params\]"):
        settings.load_settings(write_cfg(MINIMAL.replace("m = 1.0", "m = -1.0")))


def test_unknown_potential_kind(write_cfg):
    with pytest.raises(ConfigError, match="unknown potential kind"):
        settings.load_settings(write_cfg(MINIMAL + "[confinement]\nkind = sextic\n"))


def test_coarse_grid(write_cfg):
    config = settings.load_settings(write_cfg(MINIMAL + "[grid]\nnx = 8\n"))
    with pytest.raises(ConfigError, match=r"\[grid\]"):
        config.grid


def test_expression_potential(write_cfg):
    text = MINIMAL + "[confinement]\nkind = expression\nexpression = x**2\n"
    config = settings.load_settings(write_cfg(text))
    assert config.spec.U.value([[2.0]]) == pytest.approx(4.0)


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv(settings.SEED_VARIABLE, raising=False)
    assert settings.resolve_seed(None, 3) == 3

    monkeypatch.setenv(settings.SEED_VARIABLE, "11")
    assert settings.resolve_seed(None, 3) == 11
    assert settings.resolve_seed(7, 3) == 7

    monkeypatch.setenv(settings.SEED_VARIABLE, "eleven")
    with pytest.raises(ConfigError, match="VFP_SEED"):
        settings.resolve_seed(None, 3)
