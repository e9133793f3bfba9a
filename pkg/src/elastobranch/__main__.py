"""Process entry points: `python -m elastobranch run <config>` executes a
configured study, `python -m elastobranch summarize <branch.csv>` digests
its CSV output."""

import argparse
import sys

from .runner import run, summarize, ConfigError, EXIT_CONFIG


def main(argv=None):
    parser = argparse.ArgumentParser(prog="elastobranch")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a configured continuation study")
    p_run.add_argument("config", help="path to the INI configuration file")
    p_sum = sub.add_parser("summarize", help="report on a branch CSV")
    p_sum.add_argument("csv", help="path to a branch CSV file")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run(args.config)
    try:
        text = summarize(args.csv)
    except (ConfigError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    print(text)
    return EXIT_CONFIG if text == "no accepted steps" else 0


if __name__ == "__main__":
    sys.exit(main())
