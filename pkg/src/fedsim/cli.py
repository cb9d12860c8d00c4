"""Command-line entry point.

  fedsim run --config cfg.json [--protocol P] [--seeds 1,2] [--out DIR]
             [--csv] [--archive-data]
  fedsim selftest [--fast]
  fedsim presets

Exit codes: 0 success, 1 configuration error, 2 invariant violation
during simulation.
"""

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import selftest as selftest_mod
from .errors import ConfigError, SimulationInvariantError
from .harness import parse_config, run_experiment, summary_to_dict
from .kernels import BACKEND
from .presets import preset_names


def _parse_seeds(text):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError([f"--seeds: expected comma-separated integers, got {text!r}"])


def _cmd_run(args):
    config = parse_config(args.config)
    if args.protocol:
        config = replace(config, protocols=tuple(args.protocol))
    if args.seeds:
        config = replace(config, seeds=_parse_seeds(args.seeds))
    rows = run_experiment(
        config, out_dir=args.out, write_csv=args.csv, archive_data=args.archive_data
    )
    json.dump(summary_to_dict(rows, config), sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_selftest(args):
    return selftest_mod.run_selftest(fast=args.fast)


def _cmd_presets(_args):
    for name in preset_names():
        print(name)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fedsim",
        description=f"staleness-aware federated learning simulator (kernels: {BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON config file")
    p_run.add_argument(
        "--protocol",
        action="append",
        help="override the config's protocol list (repeatable)",
    )
    p_run.add_argument("--seeds", help="override seeds, comma separated")
    p_run.add_argument("--out", help="output directory for logs and summaries")
    p_run.add_argument("--csv", action="store_true", help="also write summary.csv")
    p_run.add_argument(
        "--archive-data", action="store_true", help="dump generated datasets as JSON"
    )
    p_run.set_defaults(func=_cmd_run)

    p_selftest = sub.add_parser("selftest", help="run the built-in invariant suite")
    p_selftest.add_argument("--fast", action="store_true", help="smaller draw counts")
    p_selftest.set_defaults(func=_cmd_selftest)

    p_presets = sub.add_parser("presets", help="list known preset names")
    p_presets.set_defaults(func=_cmd_presets)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except SimulationInvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
