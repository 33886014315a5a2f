"""The util module contains a variety of utility functions."""
import configparser
import hashlib
import sys

import numpy as np

from vfplab.errors import ConfigError


def read_cfg_file(filename):
    """Read and parse a configuration file with configparser."""

    config = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    config.optionxform = str

    try:
        out = config.read(str(filename))

        if not out and filename is not None:
            raise ConfigError(f"the file '{filename}' is empty or does not exist")

    except configparser.MissingSectionHeaderError:
        raise ConfigError(f"you are missing a section heading in {filename}")

    except configparser.DuplicateOptionError as error:
        raise ConfigError(
            f"{filename}:{error.lineno}: option '{error.option}' "
            f"repeated in section [{error.section}]"
        )

    except configparser.ParsingError:
        raise ConfigError(
            "having trouble reading your configuration file, did you forget "
            "'=' signs?\n{}".format(sys.exc_info()[1])
        )

    return config


def find_line(filename, section, option=None):
    """Return the 1-based line number of a section header or of an option
    inside it, or None when it does not appear in the file."""

    if filename is None:
        return None

    try:
        lines = open(filename, encoding="utf-8").read().splitlines()
    except OSError:
        return None

    current = None

    for number, line in enumerate(lines, start=1):
        stripped = line.strip()

        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if option is None and current == section:
                return number
        elif current == section and option is not None:
            key = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if key == option:
                return number

    return None


def sha256_of(filename):
    """Hex digest of a file, used in artifact manifests."""

    digest = hashlib.sha256()

    with open(filename, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            digest.update(block)

    return digest.hexdigest()


def pairwise_sum(values, axis=0):
    """Sum along an axis by a fixed binary tree.

    The association order depends only on the length of the axis, so the
    result is bitwise reproducible whatever the memory layout or schedule.
    """

    values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)

    if values.shape[0] == 0:
        return np.zeros(values.shape[1:])

    while values.shape[0] > 1:
        if values.shape[0] % 2:
            tail = values[-1:]
            values = values[:-1]
            values = values[0::2] + values[1::2]
            values = np.concatenate([values, tail])
        else:
            values = values[0::2] + values[1::2]

    return values[0]


def pairwise_mean(values, axis=0):
    """Mean along an axis with pairwise_sum."""

    values = np.asarray(values, dtype=float)
    return pairwise_sum(values, axis=axis) / values.shape[axis]


def normalize_path(working_dir, filename):
    """Normalize the path of a filename relative to a specific directory."""

    path = filename

    if not path.is_absolute():
        path = working_dir / path

    return path.resolve()


def header1(string):
    """Print a formatted heading."""
    print(("\n".join(["", "", string, "=" * len(string), ""])))


def header2(string):
    """Print a formatted subheading."""
    print(("\n".join(["", string, "-" * len(string), ""])))


def print_items(items, width=None):
    """Print aligned 'name : value' lines under a heading."""

    items = list(items)

    if not items:
        return

    if width is None:
        width = max(len(name) for name, _ in items)

    for name, value in items:
        if isinstance(value, float):
            value = f"{value: .6e}"
        print(f"  {name:<{width}s} : {value}")
