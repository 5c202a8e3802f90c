"""Command line entry point: ``hmdd-study CONFIG.toml``.

Exit codes: 0 success, 1 at least one run failed, 2 configuration error.
"""
import argparse
import logging
import sys

from .errors import ConfigurationError
from .study import StudyConfig, run_study


def build_parser():
    p = argparse.ArgumentParser(prog="hmdd-study", description="Run a convergence study from a TOML config.")
    p.add_argument("config", help="path to the TOML study configuration")
    p.add_argument("-o", "--output-dir", help="override study.output_dir")
    p.add_argument("-j", "--workers", type=int, help="number of worker processes")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = StudyConfig.from_toml(args.config)
        if args.output_dir:
            config.output_dir = args.output_dir
        if args.workers is not None:
            config.workers = args.workers
        config.validate()
        result = run_study(config)
    except ConfigurationError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    sys.stdout.write(result.summary)
    print("wrote %s, %s and %d plots" % (result.csv_path, result.summary_path, len(result.plots)))
    return 1 if result.n_failed else 0


if __name__ == "__main__":
    sys.exit(main())
