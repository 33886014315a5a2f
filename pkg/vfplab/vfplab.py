"""The vfplab module provides the entry point for the vfplab script."""
import sys

from vfplab import __version__
from vfplab import experiments
from vfplab import settings
from vfplab import util
from vfplab import writing
from vfplab.errors import AcceptanceError
from vfplab.errors import VFPError

LOGO = r"""
* * * * * * * * * * * * * * * * * * * * * * * * *
*          __  __       _       _               *
*   __   _/ _|/ _ \ ___| | __ _| |__            *
*   \ \ / / |_| |_) / __| |/ _` | '_ \          *
*    \ V /|  _|  __/ (__| | (_| | |_) |         *
*     \_/ |_| |_|   \___|_|\__,_|_.__/          *
*                                               *
*   Vlasov-Fokker-Planck numerical laboratory   *
*                                               *
*   Version: {:<34s} *
*                                               *
* * * * * * * * * * * * * * * * * * * * * * * * *
""".format(
    __version__
)


def main():
    """Do all the magic."""
    from vfplab import cli

    print(LOGO)

    parser = cli.build_parser()
    args = parser.parse_args()

    if args.commands is None:
        parser.print_help()
        return

    try:
        args.func(args)
    except VFPError as error:
        sys.stderr.write(f"error: {error}\n")
        sys.exit(error.exit_code)


def run(args):
    """Run the pipeline of a subcommand and write its manifest."""

    util.header1("Reading Configuration")
    print(f"  * {args.config}")

    config = settings.load_settings(args.config)
    seed = settings.resolve_seed(args.seed, config["simulation"]["seed"])

    print(f"\nFile(s) in {args.out_dir}:")
    writer = writing.ArtifactWriter(args.out_dir)

    pipeline = experiments.grab(args.commands)(
        config,
        writer,
        seed,
        threads=args.threads,
        plot=args.plot,
        verbose=args.verbose,
    )
    pipeline.run()
    pipeline.print_checks()

    util.header1("Writing Manifest")
    writer.manifest(args.commands, config, seed)

    failures = pipeline.failures()

    if args.check and failures:
        names = ", ".join(check.name for check in failures)
        raise AcceptanceError(f"{len(failures)} check(s) failed: {names}")

    return pipeline
