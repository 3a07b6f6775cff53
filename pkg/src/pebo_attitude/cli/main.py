"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..sim.kinematics import NumericalError
from .config import ConfigError, ScenarioConfig, example1_config
from .example2 import run_example2
from .plots import emit_plots
from .runner import OUTPUT_DIR_ENV, evaluate_conditions, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _print_summary(summary: dict, out) -> None:
    for name, entry in summary["observers"].items():
        fields = " ".join(f"{k}={v:.6g}" for k, v in sorted(entry.items()) if isinstance(v, float))
        print(f"observer={name} {fields}", file=out)
    if "trace" in summary:
        print(f"trace={summary['trace']}", file=out)


def format_conditions(report: dict) -> list[str]:
    lines = []
    for c in report["conditions"]:
        verdict = "satisfied" if c["satisfied"] else "not-satisfied"
        witness = ",".join(f"{t:.6g}" for t in c["witness_times"])
        line = f"condition={c['condition']} verdict={verdict} margin={c['margin']:.6g} witness={witness}"
        lines.append(line + (f" note={c['note']!r}" if c["note"] else ""))
    for e in report["excitation"]:
        verdict = "PE" if e["excited"] else "not-PE"
        lines.append(f"excitation={e['reference']} kind={e['kind']} verdict={verdict} "
                     f"window_T={e['window_T']:.6g} delta={e['delta']:.6g}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pebo-attitude", description="Single-vector attitude observer experiments.")
    p.add_argument("--output-dir", help=f"output directory (default: ${OUTPUT_DIR_ENV} or the working directory)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario config")
    s.add_argument("config")

    s = sub.add_parser("check", help="evaluate observability conditions of a scenario config")
    s.add_argument("config")
    s.add_argument("--json", action="store_true", help="print the report as JSON")

    s = sub.add_parser("example1", help="switching-reference example")
    s.add_argument("--noise", action="store_true", help="enable sensor noise")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--horizon", type=float, default=60.0)

    s = sub.add_parser("example2", help="helicopter comparison")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--alpha-baseline", type=float, default=8.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-noise", action="store_true")

    s = sub.add_parser("plot", help="write plot scripts for a trace CSV")
    s.add_argument("trace")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out, err = sys.stdout, sys.stderr
    try:
        if args.command == "simulate":
            res = run_scenario(ScenarioConfig.load(args.config), args.output_dir)
            _print_summary(res.summary, out)
        elif args.command == "check":
            report = evaluate_conditions(ScenarioConfig.load(args.config))
            if args.json:
                print(json.dumps(report, indent=2, sort_keys=True), file=out)
            else:
                print("\n".join(format_conditions(report)), file=out)
        elif args.command == "example1":
            if args.seed < 0:
                raise ConfigError(f"--seed: must be >= 0, got {args.seed}")
            if args.horizon < 0:
                raise ConfigError(f"--horizon: must be >= 0, got {args.horizon}")
            res = run_scenario(example1_config(args.noise, args.seed, args.horizon), args.output_dir)
            _print_summary(res.summary, out)
        elif args.command == "example2":
            for flag, v in (("--alpha", args.alpha), ("--alpha-baseline", args.alpha_baseline)):
                if not v > 0:
                    raise ConfigError(f"{flag}: must be > 0, got {v}")
            res = run_example2(args.alpha, args.alpha_baseline, noise=not args.no_noise, seed=args.seed,
                               out_dir=args.output_dir)
            for name, entry in res.summary["observers"].items():
                print(f"observer={name} steady_mean_error={entry['steady_mean_error']:.6g} "
                      f"terminal_dist={entry['terminal_dist']:.6g}", file=out)
            print(f"trace={res.summary['trace']}", file=out)
        else:
            try:
                paths = emit_plots(args.trace, args.output_dir)
            except FileNotFoundError:
                raise ConfigError(f"{args.trace}: no such trace file") from None
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            for path in paths:
                print(path, file=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=err)
        return EXIT_NUMERIC
    return EXIT_OK
