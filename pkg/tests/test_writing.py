import configparser

import numpy as np
import pytest

from tests.conftest import gaussian
from vfplab import settings
from vfplab import util
from vfplab import writing
from vfplab.density import GridSpec
from vfplab.errors import ConfigError


@pytest.fixture
def writer(tmp_path):
    return writing.ArtifactWriter(tmp_path / "out")


def test_table(writer):
    rows = [[0.0, 1.0, 2.0], [0.5, 0.25, 0.125]]
    path = writer.table("energy.csv", ["t", "F", "I"], rows)

    assert path.read_text().splitlines()[0] == "t,F,I"
    np.testing.assert_array_equal(np.loadtxt(path, delimiter=",", skiprows=1), rows)
    script = (writer.out_dir / "energy.gp").read_text()
    assert 'plot for [col=2:3] "energy.csv" using 1:col with lines' in script


def test_table_without_script(writer):
    writer.table("hwi.csv", ["pair_id", "holds"], [[0, 1]], plot=None)
    assert not (writer.out_dir / "hwi.gp").exists()


def test_density_round_trip(writer):
    grid = GridSpec(-3.0, 5.0, -4.0, 4.0, 16, 24)
    f = gaussian(grid, mx=1.0, sv=0.8)
    path = writer.density("f.csv", f)
    g = writing.read_density(path)

    assert g.grid.shape == grid.shape
    assert g.grid.x_min == pytest.approx(-3.0)
    assert g.grid.v_max == pytest.approx(4.0)
    np.testing.assert_allclose(g.values, f.values, rtol=1e-11)


def test_read_density_errors(tmp_path):
    missing = tmp_path / "missing.csv"
    with pytest.raises(ConfigError, match="cannot read"):
        writing.read_density(missing)

    two_columns = tmp_path / "two.csv"
    two_columns.write_text("x,v\n0,0\n1,1\n")
    with pytest.raises(ConfigError, match="three columns"):
        writing.read_density(two_columns)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("x,v,f\n0,0,1\n0,1,1\n1,0,1\n")
    with pytest.raises(ConfigError, match="tensor grid"):
        writing.read_density(ragged)


def test_manifest(writer, write_cfg):
    config = settings.load_settings(
        write_cfg("[params]\nm = 1.0\ngamma = 1.0\nkB_TB = 1.0\n")
    )
    table = writer.table("t.csv", ["t", "y"], [[0.0, 1.0]], plot=None)
    path = writer.manifest("stationary", config, 42)

    manifest = configparser.ConfigParser()
    manifest.optionxform = str
    manifest.read(path)

    assert manifest["run"]["command"] == "stationary"
    assert manifest["run"]["seed"] == "42"
    assert manifest["run"]["config_sha256"] == config.digest
    assert "numpy" in manifest["versions"]
    assert manifest["artifacts"]["t.csv"] == util.sha256_of(table)
