"""Command-line entry point for running experiment sweeps."""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .experiments import (ARCHITECTURES, RADIATION_MODELS, Scenario, customize,
                          run_scenario, scenario_from_file, scenario_presets,
                          write_csv)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_ROWS = 2


def _parse_list(text: str, allowed: tuple[str, ...], what: str) -> tuple[str, ...]:
    items = tuple(v.strip() for v in text.split(",") if v.strip())
    for item in items:
        if item not in allowed:
            raise ConfigError(f"unknown {what} {item!r} (choose from {', '.join(allowed)})")
    if not items:
        raise ConfigError(f"empty {what} list")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinchcast",
        description="Multigroup multicast sweeps for pinching-antenna systems")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write a results CSV")
    run.add_argument("--scenario", required=True,
                     help="preset name (fig3..fig9) or path to a scenario file")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default="results.csv")
    run.add_argument("--arch", default=None,
                     help="comma list drawn from wd,wm,conv,massive")
    run.add_argument("--radiation", default=None,
                     help="comma list drawn from equal,proportional")
    run.add_argument("--workers", type=int, default=1,
                     help="parallel trial workers (output is identical at any count)")
    run.add_argument("--timing", action="store_true",
                     help="record wall-clock times (breaks byte-for-byte reproducibility)")

    sub.add_parser("list-scenarios", help="list the built-in scenario presets")

    val = sub.add_parser("validate-config", help="check a configuration file")
    val.add_argument("path")
    return parser


def _load_scenario(name_or_path: str) -> Scenario:
    presets = scenario_presets()
    if name_or_path in presets:
        return presets[name_or_path]
    if os.path.exists(name_or_path):
        return scenario_from_file(name_or_path)
    raise ConfigError(f"no preset or file named {name_or_path!r}")


def cmd_run(args) -> int:
    try:
        scenario = _load_scenario(args.scenario)
        arch = (_parse_list(args.arch, ARCHITECTURES, "architecture")
                if args.arch else None)
        radiation = (_parse_list(args.radiation, RADIATION_MODELS, "radiation model")
                     if args.radiation else None)
        scenario = customize(scenario, trials=args.trials, seed=args.seed,
                             architectures=arch, radiation_models=radiation)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = run_scenario(scenario, workers=args.workers, measure_time=args.timing)
    write_csv(rows, args.out)
    failed = sum(1 for row in rows if row.failed)
    print(f"{scenario.name}: wrote {len(rows)} rows to {args.out}"
          + (f" ({failed} failed)" if failed else ""))
    return EXIT_FAILED_ROWS if failed else EXIT_OK


def cmd_list_scenarios() -> int:
    for name, scenario in scenario_presets().items():
        values = ",".join(format(v, "g") for v in scenario.sweep_values)
        print(f"{name}: sweep {scenario.sweep_variable} over [{values}], "
              f"arch {','.join(scenario.architectures)}, "
              f"radiation {','.join(scenario.radiation_models)}, "
              f"users {scenario.user_distribution}, trials {scenario.trials}")
    return EXIT_OK


def cmd_validate_config(path: str) -> int:
    try:
        config, block = load_config(path)
    except (OSError, ConfigError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {config.num_waveguides} waveguides, {config.num_groups} groups, "
          f"{config.num_users} users"
          + (f", scenario block with {len(block)} keys" if block else ""))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "list-scenarios":
        return cmd_list_scenarios()
    if args.command == "validate-config":
        return cmd_validate_config(args.path)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
