"""The cli module contains the parsing of command-line arguments."""
import argparse
import pathlib
import sys

from vfplab import __version__
from vfplab import experiments
from vfplab import util
from vfplab import vfplab

PIPELINES = ("simulate", "dissipation", "pullback", "generic", "hwi", "stationary")


class MyParser(argparse.ArgumentParser):
    """Subclass of ArgumentParser to override the error method."""

    def error(self, message):
        sys.stderr.write(f"error: {message}\n\n")
        self.print_help()
        sys.exit(2)


def positive_int(value):
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser():
    """Parse the command-line arguments."""
    description = (
        "vfplab is a numerical laboratory for the nonlinear Vlasov-Fokker-Planck "
        "equation and its mean-field Langevin particle system. It simulates both, "
        "and checks the free-energy dissipation identities, the pullback along "
        "the Hamiltonian flow, the GENERIC splitting of the equation, the "
        "stationary measure and the partial HWI inequality."
    )

    parser = MyParser(description=description, prog="vfplab")

    parser.add_argument(
        "--version", action="version", version=f"{parser.prog} {__version__}"
    )

    commands = parser.add_subparsers(dest="commands")

    # parser for the positional argument "info"
    info_parser = commands.add_parser(
        "info",
        help="Shows the pipelines behind the subcommands",
        description="Enter the name of a pipeline to obtain more info about it.",
    )

    info_parser.set_defaults(func=get_info)

    experiments_parser = info_parser.add_subparsers(dest="experiments")
    experiments_parser.required = True

    docs = experiments.get_experiment_docs()

    for exp_name, doc in docs.items():
        experiments_parser.add_parser(
            exp_name, help=get_description_from_doc(doc), add_help=False
        )

    for name in PIPELINES:
        doc = docs.get(name, name)
        pipeline_parser = commands.add_parser(
            name,
            help=get_description_from_doc(doc),
            description=get_description_from_doc(doc),
        )
        pipeline_parser.set_defaults(func=vfplab.run)
        add_run_arguments(pipeline_parser, name)

    return parser


def add_run_arguments(parser, name):

    parser.add_argument(
        "--config",
        dest="config",
        type=pathlib.Path,
        metavar="FILE",
        required=True,
        help="Configuration file of the run",
    )

    parser.add_argument(
        "--seed",
        dest="seed",
        type=int,
        metavar="N",
        help="Random seed (overrides VFP_SEED and [simulation] seed)",
    )

    parser.add_argument(
        "--out",
        dest="out_dir",
        type=pathlib.Path,
        metavar="DIR",
        default=pathlib.Path("./Output") / name,
        help="Directory for output files",
    )

    parser.add_argument(
        "--threads",
        dest="threads",
        type=positive_int,
        metavar="N",
        default=1,
        help="Worker threads for the per-particle and per-fiber work",
    )

    parser.add_argument(
        "--check",
        action="store_true",
        help="Exit with status 4 when an acceptance check fails",
    )

    parser.add_argument("--plot", action="store_true", help="Write PDF figures")

    parser.add_argument(
        "--verbose", action="store_true", help="Print progress while running"
    )


def get_description_from_doc(doc):
    return doc.strip().splitlines()[0]


def get_info(args):
    docs = experiments.get_experiment_docs()
    util.header1('Description of the "' "{}" '" pipeline'.format(args.experiments))
    print(docs[args.experiments])
