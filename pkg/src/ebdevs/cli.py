"""Command line front end for the experiment harness.

    ebdevs run CONFIG [--seed N] [--realisations N] [--t-end T] [--out-dir DIR] [--KEY VALUE ...]
    ebdevs sweep CONFIG [...]
    ebdevs plot CSV [CSV ...] -o OUT.svg
    ebdevs trace CONFIG [-o LOG]

Unknown ``--KEY VALUE`` pairs override model parameters.  Exit codes: 0 ok,
2 configuration error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigurationError, EBDevsError, PlotError
from .harness import load_config, run_experiment, trace_run
from .plot import plot

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION = 0, 2, 3

log = logging.getLogger("ebdevs")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebdevs", description="Run EB-DEVS experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run one parameter set, ignoring any sweep"),
        ("sweep", "run every value of the configured sweep"),
        ("trace", "write the event log of one realisation"),
    ):
        c = sub.add_parser(name, help=help_)
        c.add_argument("config")
        c.add_argument("--seed", type=int)
        c.add_argument("--realisations", type=int)
        c.add_argument("--t-end", type=float)
        c.add_argument("--out-dir")
        if name != "trace":
            c.add_argument("--workers", type=int)
        else:
            c.add_argument("-o", "--output", help="log file (default: stdout)")
    c = sub.add_parser("plot", help="draw CSV series into an SVG")
    c.add_argument("csv", nargs="+")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--title", default="")
    return p


def _param_overrides(extra: list[str]) -> dict:
    out = {}
    i = 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise ConfigurationError(f"unexpected argument {arg!r}")
        key = arg[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            value = extra[i + 1]
            i += 2
        else:
            raise ConfigurationError(f"missing value for {arg}")
        out[key.replace("-", "_")] = value
    return out


def _config(args, extra):
    overrides = _param_overrides(extra)
    for key in ("seed", "realisations", "t_end", "out_dir", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    config = load_config(args.config, overrides)
    if args.command == "run":
        config.sweep = None
    elif args.command == "sweep" and config.sweep is None:
        raise ConfigurationError(f"{args.config}: sweep needs 'sweep = KEY: v1, v2, ...'")
    return config


def main(argv=None) -> int:
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "plot":
            if extra:
                raise ConfigurationError(f"unexpected arguments {extra}")
            plot(args.csv, args.output, title=args.title)
            return EXIT_OK
        config = _config(args, extra)
        if args.command == "trace":
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    trace_run(config, fh)
            else:
                trace_run(config, sys.stdout)
            return EXIT_OK
        bundle = run_experiment(config)
        for rec in bundle.runs:
            log.info("sweep %d realisation %d: %s", rec.sweep_index, rec.realisation, rec.error or rec.final)
        if bundle.failed:
            for rec in bundle.failed:
                print(f"run {rec.sweep_index}/{rec.realisation} failed: {rec.error}", file=sys.stderr)
            return EXIT_SIMULATION
        print(f"{len(bundle.runs)} runs written to {config.out_dir}")
        return EXIT_OK
    except (ConfigurationError, PlotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EBDevsError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
