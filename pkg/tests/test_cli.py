import sys

import pytest

from vfplab import cli
from vfplab import experiments
from vfplab import vfplab
from vfplab.errors import ConfigError
from vfplab.experiments.stationary import Stationary

CONFIG = """\
[params]
m = 1.0
gamma = 1.0
kB_TB = 1.0

[confinement]
kind = quadratic
kappa = 0.5

[grid]
x_min = -7.0
x_max = 7.0
v_min = -7.0
v_max = 7.0
nx = 64
nv = 64
"""


def run_main(monkeypatch, *arguments):
    monkeypatch.setattr(sys, "argv", ["vfplab", *arguments])
    vfplab.main()


def test_every_pipeline_is_documented():
    docs = experiments.get_experiment_docs()
    assert set(docs) == set(cli.PIPELINES)
    assert experiments.grab("stationary") is Stationary


def test_unknown_pipeline():
    with pytest.raises(ConfigError, match="not one of the vfplab pipelines"):
        experiments.grab("relax")


def test_parser():
    parser = cli.build_parser()
    args = parser.parse_args(["hwi", "--config", "run.cfg", "--threads", "2"])
    assert args.commands == "hwi"
    assert args.threads == 2
    assert args.seed is None
    assert not args.check
    assert args.out_dir.name == "hwi"


def test_parser_rejects_zero_threads(capsys):
    parser = cli.build_parser()
    with pytest.raises(SystemExit) as error:
        parser.parse_args(["hwi", "--config", "run.cfg", "--threads", "0"])
    assert error.value.code == 2


def test_info(monkeypatch, capsys):
    run_main(monkeypatch, "info", "hwi")
    assert "Partial HWI inequality" in capsys.readouterr().out


def test_stationary_run(monkeypatch, tmp_path, write_cfg):
    out = tmp_path / "out"
    arguments = ["--config", str(write_cfg(CONFIG)), "--out", str(out), "--check"]
    run_main(monkeypatch, "stationary", *arguments)
    for name in ("stationary.csv", "convergence.csv", "energy.csv", "manifest.cfg"):
        assert (out / name).exists()


def test_failed_check_exit_code(monkeypatch, tmp_path, write_cfg):
    config = write_cfg(CONFIG + "\n[checks]\nstationary_I = -1.0\n")
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as error:
        run_main(monkeypatch, "stationary", "--config", str(config), "--check")
    assert error.value.code == 4


def test_configuration_error_exit_code(monkeypatch, tmp_path, write_cfg):
    config = write_cfg(CONFIG.replace("nx = 64", "nx = 64\nny = 64"))
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as error:
        run_main(monkeypatch, "stationary", "--config", str(config))
    assert error.value.code == 2
