"""The settings module reads and checks the configuration files.

A configuration is a configparser file with one section per concern. Every
section is checked against a schema of the form
{"name": {"type": float, "default": ...}}; keys without a default are
required. Errors name the section, the key and the line of the file.
"""
import dataclasses
import os
import pathlib

from vfplab import potentials
from vfplab import util
from vfplab.density import GridSpec
from vfplab.errors import ConfigError
from vfplab.errors import VFPError
from vfplab.parameters import derived_constants

SEED_VARIABLE = "VFP_SEED"

BOOLEAN_STATES = {
    "1": True,
    "yes": True,
    "true": True,
    "on": True,
    "0": False,
    "no": False,
    "false": False,
    "off": False,
}


def get_bool(value):
    if value.lower() not in BOOLEAN_STATES:
        raise ValueError(f"Not a boolean: {value}")
    return BOOLEAN_STATES[value.lower()]


PARAMS = {
    "m": {"type": float},
    "gamma": {"type": float},
    "kB_TB": {"type": float},
    "dim": {"type": int, "default": 1},
}

POTENTIAL = {
    "kind": {"type": str, "default": "zero"},
    "kappa_U": {"type": float, "default": None},
}

SIMULATION = {
    "n_particles": {"type": int, "default": 10000},
    "dt": {"type": float, "default": 1e-2},
    "t_end": {"type": float, "default": 1.0},
    "seed": {"type": int, "default": 0},
    "record_every": {"type": int, "default": 10},
    "init": {"type": str, "default": "gaussian"},
    "sx": {"type": float, "default": 1.0},
    "sv": {"type": float, "default": 1.0},
    "mx": {"type": float, "default": 0.0},
    "mv": {"type": float, "default": 0.0},
    "samples": {"type": "path", "default": None},
    "trajectory_stride": {"type": int, "default": 1},
    "density_every": {"type": int, "default": 0},
    "bandwidth": {"type": str, "default": "silverman"},
}

GRID = {
    "x_min": {"type": float, "default": -6.0},
    "x_max": {"type": float, "default": 6.0},
    "v_min": {"type": float, "default": -6.0},
    "v_max": {"type": float, "default": 6.0},
    "nx": {"type": int, "default": 128},
    "nv": {"type": int, "default": 128},
}

PDE = {
    "dt": {"type": float, "default": 1e-3},
    "t_end": {"type": float, "default": 1.0},
    "record_every": {"type": int, "default": 10},
    "scheme": {"type": str, "default": "central"},
    "theta": {"type": float, "default": 0.5},
    "accuracy": {"type": int, "default": 6},
    "sx": {"type": float, "default": 1.0},
    "sv": {"type": float, "default": 1.0},
    "mx": {"type": float, "default": 0.0},
    "mv": {"type": float, "default": 0.0},
}

FLOW = {
    "dt": {"type": float, "default": 1e-3},
    "n_times": {"type": int, "default": 10},
    "method": {"type": str, "default": "grid"},
}

STATIONARY = {
    "damping": {"type": float, "default": 0.5},
    "tol": {"type": float, "default": 1e-10},
    "max_iter": {"type": int, "default": 500},
    "evolve_t": {"type": float, "default": 0.0},
}

HWI = {
    "n_pairs": {"type": int, "default": 200},
    "n_perturbed": {"type": int, "default": 20},
    "M": {"type": float, "default": 1.0},
    "seed": {"type": int, "default": 0},
    "x_half": {"type": float, "default": 4.0},
    "v_half": {"type": float, "default": 12.0},
    "nx": {"type": int, "default": 48},
    "nv": {"type": int, "default": 384},
    "n_probes": {"type": int, "default": 10},
    "probe_dt": {"type": float, "default": 0.05},
    "delta": {"type": float, "default": 1e-3},
    "n_convexity": {"type": int, "default": 10},
    "reference": {"type": "path", "default": None},
    "pairs": {"type": "paths", "default": ()},
}

CHECKS = {
    "pde_rel": {"type": float, "default": 0.1},
    "pde_abs": {"type": float, "default": 1e-3},
    "particle_rel": {"type": float, "default": 0.2},
    "particle_abs": {"type": float, "default": 1e-2},
    "pullback_F": {"type": float, "default": 2e-2},
    "pullback_I_rel": {"type": float, "default": 5e-2},
    "pullback_I_abs": {"type": float, "default": 1e-2},
    "generic_rhs": {"type": float, "default": 1e-10},
    "generic_poisson": {"type": float, "default": 1e-8},
    "generic_operators": {"type": float, "default": 1e-8},
    "metric_rel": {"type": float, "default": 0.05},
    "metric_abs": {"type": float, "default": 1e-3},
    "convexity_rel": {"type": float, "default": 0.02},
    "convexity_abs": {"type": float, "default": 1e-4},
    "stationary_I": {"type": float, "default": 1e-6},
    "stationary_L1": {"type": float, "default": 1e-6},
    "kramers_rel": {"type": float, "default": 1e-3},
    "moment_bound": {"type": float, "default": 1e3},
}

SECTIONS = {
    "params": PARAMS,
    "confinement": POTENTIAL,
    "interaction": POTENTIAL,
    "simulation": SIMULATION,
    "grid": GRID,
    "pde": PDE,
    "flow": FLOW,
    "stationary": STATIONARY,
    "hwi": HWI,
    "checks": CHECKS,
}

# Sections whose extra keys are handed to the potential factory.
OPEN_SECTIONS = ("confinement", "interaction")


def _where(filename, section, option=None):
    line = util.find_line(filename, section, option)
    if line is None:
        return f"{filename}: " if filename else ""
    return f"{filename}:{line}: "


def _convert(raw, kind, base_dir):
    if kind is bool:
        return get_bool(raw)
    if kind == "path":
        return util.normalize_path(base_dir, pathlib.Path(raw))
    if kind == "paths":
        return tuple(
            util.normalize_path(base_dir, pathlib.Path(p)) for p in raw.split()
        )
    return kind(raw)


def check_section(config, section, schema=None, filename=None, extra=False):
    """Check a config section against its schema and convert the values.

    With extra=True, keys absent from the schema are kept as raw strings.
    """

    if schema is None:
        schema = SECTIONS[section]

    items = dict(config.items(section)) if config.has_section(section) else {}
    base_dir = pathlib.Path(filename).parent if filename else pathlib.Path.cwd()
    details = {}
    missing = []

    for name, item in schema.items():
        if name not in items:
            if "default" in item:
                details[name] = item["default"]
            else:
                missing.append(name)
            continue

        kind = item["type"]

        try:
            details[name] = _convert(items[name], kind, base_dir)
        except ValueError:
            label = kind if isinstance(kind, str) else kind.__name__
            raise ConfigError(
                f"{_where(filename, section, name)}[{section}] {name} = "
                f"'{items[name]}' is not a valid {label}"
            )

    if missing:
        names = ", ".join(f"'{name}'" for name in missing)
        raise ConfigError(
            f"{_where(filename, section)}[{section}] missing required "
            f"key(s): {names}"
        )

    unknown = [name for name in items if name not in schema]

    if unknown and not extra:
        name = unknown[0]
        raise ConfigError(
            f"{_where(filename, section, name)}[{section}] unknown key '{name}'"
        )

    for name in unknown:
        details[name] = items[name]

    return details


@dataclasses.dataclass
class Settings:
    """Checked content of a configuration file."""

    filename: pathlib.Path
    digest: str
    params: object
    spec: object
    sections: dict

    def __getitem__(self, section):
        return self.sections[section]

    @property
    def grid(self):
        details = self.sections["grid"]
        try:
            return GridSpec(**details)
        except VFPError as error:
            raise ConfigError(f"{_where(self.filename, 'grid')}[grid] {error}")


def _build_potential(details, section, filename):
    raw = {name: value for name, value in details.items() if name != "kappa_U"}

    if "file" in raw:
        raw["file"] = util.normalize_path(filename.parent, pathlib.Path(raw["file"]))

    try:
        return potentials.build_potential(raw, section)
    except VFPError as error:
        raise ConfigError(f"{_where(filename, section)}{error}")


def _growth_constant(details, potential):
    if details.get("kappa_U") is not None:
        return details["kappa_U"]
    if isinstance(potential, potentials.Quadratic):
        return potential.kappa
    return 0.0


def load_settings(filename):
    """Read, check and convert a configuration file."""

    filename = pathlib.Path(filename)
    config = util.read_cfg_file(filename)

    for section in config.sections():
        if section not in SECTIONS:
            raise ConfigError(
                f"{_where(filename, section)}unknown section [{section}], "
                f"choose from {sorted(SECTIONS)}"
            )

    if not config.has_section("params"):
        raise ConfigError(f"{filename}: missing section [params]")

    sections = {
        section: check_section(
            config, section, schema, filename, extra=section in OPEN_SECTIONS
        )
        for section, schema in SECTIONS.items()
    }

    p = sections["params"]

    try:
        params = derived_constants(p["m"], p["gamma"], p["kB_TB"], p["dim"])
    except VFPError as error:
        raise ConfigError(f"{_where(filename, 'params')}[params] {error}")

    U = _build_potential(sections["confinement"], "confinement", filename)
    K = _build_potential(sections["interaction"], "interaction", filename)
    kappa_U = _growth_constant(sections["confinement"], U)

    spec = potentials.PotentialSpec(U=U, K=K, kappa_U=kappa_U)

    return Settings(filename, util.sha256_of(filename), params, spec, sections)


def resolve_seed(cli_seed, config_seed):
    """Seed precedence: --seed, then the VFP_SEED variable, then the config."""

    if cli_seed is not None:
        return int(cli_seed)

    value = os.environ.get(SEED_VARIABLE)

    if value is not None and value.strip():
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{SEED_VARIABLE} = '{value}' is not an integer")

    return int(config_seed)

