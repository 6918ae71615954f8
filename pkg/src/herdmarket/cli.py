"""Command line entry points.

Subcommands map one-to-one onto the experiment drivers:

    herdmarket run        -o DIR [-c FILE] [flags]   single-scenario Monte Carlo
    herdmarket twin       -o DIR [-c FILE] [flags]   seed-paired reference/focal
    herdmarket sweep-kt   -o DIR --kt 1,10,50,...    leader classes vs trigger step
    herdmarket robustness -o DIR [--fraction F]      rewired vs baseline focal runs
    herdmarket report     BUNDLE_DIR                 re-aggregate an existing bundle

Flag precedence on top of the config file, lowest to highest: --preset,
--set section.key=value, then the dedicated shortcuts (--seed, --steps,
--replicates, --scenario, --tax, --workers). Errors print a single
`error: ...` line to stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import sys

from .config import (
    PRESETS,
    SCENARIOS,
    ConfigError,
    ScenarioConfig,
    load_config_file,
    parse_config,
)
from .output import (
    report_bundle,
    write_robustness_bundle,
    write_run_bundle,
    write_sweep_bundle,
    write_twin_bundle,
)
from .runner import (
    monte_carlo,
    robustness_rewire,
    sweep_trigger_step,
    twin_monte_carlo,
)
from .taxation import TaxScheme

DEFAULT_SWEEP_KTS = "1,10,50,100,200"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", metavar="FILE", help="config file (INI)")
    parser.add_argument("-o", "--out", metavar="DIR", required=True,
                        help="output bundle directory")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="steps/replicates preset")
    parser.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append",
                        default=[], dest="assignments",
                        help="override any config key (repeatable)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--tax", choices=[t.value for t in TaxScheme])
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herdmarket",
        description="agent-based market simulator with taxation and herding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="Monte Carlo of one scenario"))
    _add_common(sub.add_parser("twin", help="seed-paired reference and focal runs"))

    sweep = sub.add_parser("sweep-kt", help="leader class mix across trigger steps")
    _add_common(sweep)
    sweep.add_argument("--kt", default=DEFAULT_SWEEP_KTS, metavar="K1,K2,...",
                       help=f"trigger steps to probe (default {DEFAULT_SWEEP_KTS})")

    robust = sub.add_parser("robustness", help="rewired vs baseline focal runs")
    _add_common(robust)
    robust.add_argument("--fraction", type=float, default=0.05,
                        help="cross-community rewiring fraction (default 0.05)")

    report = sub.add_parser("report", help="re-aggregate an existing bundle")
    report.add_argument("bundle", metavar="BUNDLE_DIR")
    return parser


def _overrides(args: argparse.Namespace) -> dict[tuple[str, str], str]:
    overrides: dict[tuple[str, str], str] = {}
    if args.preset:
        steps, replicates = PRESETS[args.preset]
        overrides[("run", "steps")] = str(steps)
        overrides[("run", "replicates")] = str(replicates)
    for assignment in args.assignments:
        target, eq, value = assignment.partition("=")
        section, dot, key = target.partition(".")
        if not eq or not dot or not section or not key:
            raise ConfigError(
                f"--set expects SECTION.KEY=VALUE, got {assignment!r}"
            )
        overrides[(section.strip(), key.strip())] = value.strip()
    shortcuts = (
        ("seed", "run", "seed"),
        ("steps", "run", "steps"),
        ("replicates", "run", "replicates"),
        ("scenario", "run", "scenario"),
        ("tax", "tax", "scheme"),
        ("workers", "run", "workers"),
    )
    for attr, section, key in shortcuts:
        value = getattr(args, attr)
        if value is not None:
            overrides[(section, key)] = str(value)
    return overrides


def _load(args: argparse.Namespace) -> ScenarioConfig:
    overrides = _overrides(args)
    if args.config:
        return load_config_file(args.config, overrides)
    return parse_config("", overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    capture = 0 if config.scenario == "focal" and config.replicates > 0 else None
    agg = monte_carlo(config, capture_graph_replicate=capture)
    write_run_bundle(agg, args.out)
    print(f"run bundle written to {args.out} "
          f"({config.replicates} replicates, {config.steps} steps, "
          f"scenario={config.scenario}, tax={config.tax.value})")
    return 0


def _cmd_twin(args: argparse.Namespace) -> int:
    config = _load(args)
    twin = twin_monte_carlo(config)
    write_twin_bundle(twin, args.out)
    aligned = sum(t.identical_before_trigger for t in twin.twins)
    print(f"twin bundle written to {args.out} "
          f"({config.replicates} pairs, {aligned} aligned before k_t)")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    try:
        kts = [int(p) for p in args.kt.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"--kt expects a comma list of integers, got {args.kt!r}")
    rows = sweep_trigger_step(config, kts)
    write_sweep_bundle(rows, config, args.out)
    print(f"sweep bundle written to {args.out} ({len(rows)} trigger steps)")
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    config = _load(args)
    result = robustness_rewire(config, args.fraction)
    write_robustness_bundle(result, args.out)
    print(f"robustness bundle written to {args.out} "
          f"(rewire fraction {args.fraction})")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    written = report_bundle(args.bundle)
    for path in written:
        print(f"rebuilt {path}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "twin": _cmd_twin,
    "sweep-kt": _cmd_sweep,
    "robustness": _cmd_robustness,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
