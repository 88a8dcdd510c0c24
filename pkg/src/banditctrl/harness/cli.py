"""Command-line entry point: run experiments, audit runs, fit slopes."""

import argparse
import json
import os
import sys

from ..errors import InputError
from .analysis import fit_slope
from .config import load_config
from .experiment import run_experiment


def _cmd_run(args):
    config = load_config(args.config)
    if args.out is not None:
        config.output_dir = args.out
    summary = run_experiment(config)
    for T, entry in summary["per_horizon"].items():
        line = f"T={T} mean_J={entry['mean_J']:.6g}"
        if "pseudo_regret" in entry:
            line += f" pseudo_regret={entry['pseudo_regret']:.6g}"
        print(line)
    if summary["slope"] is not None:
        print(f"slope={summary['slope']['value']:.4f} "
              f"(R2={summary['slope']['r_squared']:.4f})")
    if not summary["audits"]["passed"]:
        for fail in summary["audits"]["failures"]:
            print(f"AUDIT FAIL [{fail['check']}] T={fail['T']} "
                  f"seed={fail['seed']} observed={fail['observed']:.6g} "
                  f"bound={fail['bound']:.6g}", file=sys.stderr)
        return 1
    print("all audits passed")
    return 0


def _cmd_audit(args):
    config = load_config(args.config)
    config.comparator_fixed_M = False
    config.comparator_fixed_K = False
    config.plot = False
    if args.out is not None:
        config.output_dir = args.out
    summary = run_experiment(config)
    if summary["audits"]["passed"]:
        print(f"all audits passed over "
              f"{len(summary['cells'])} runs")
        return 0
    for fail in summary["audits"]["failures"]:
        print(f"AUDIT FAIL [{fail['check']}] T={fail['T']} "
              f"seed={fail['seed']} observed={fail['observed']:.6g} "
              f"bound={fail['bound']:.6g}", file=sys.stderr)
    return 1


def _cmd_slope(args):
    path = args.summary
    if os.path.isdir(path):
        path = os.path.join(path, "summary.json")
    with open(path) as fh:
        summary = json.load(fh)
    horizons = []
    regrets = []
    for key, entry in summary.get("per_horizon", {}).items():
        if "pseudo_regret" in entry:
            horizons.append(int(key))
            regrets.append(entry["pseudo_regret"])
    order = sorted(range(len(horizons)), key=lambda i: horizons[i])
    try:
        slope, intercept, r_squared = fit_slope(
            [horizons[i] for i in order], [regrets[i] for i in order])
    except InputError as exc:
        print(f"slope fit failed: {exc}", file=sys.stderr)
        return 1
    print(f"slope={slope:.4f} intercept={intercept:.4f} "
          f"r_squared={r_squared:.4f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="banditctrl",
        description="bandit linear control experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a TOML experiment config")
    p_run.add_argument("--out", default=None,
                       help="override the output directory")
    p_run.set_defaults(func=_cmd_run)

    p_audit = sub.add_parser(
        "audit", help="run invariant audits only (no comparators, no plot)")
    p_audit.add_argument("config", help="path to a TOML experiment config")
    p_audit.add_argument("--out", default=None,
                         help="override the output directory")
    p_audit.set_defaults(func=_cmd_audit)

    p_slope = sub.add_parser(
        "slope", help="fit a regret-rate slope from a summary.json")
    p_slope.add_argument(
        "summary", help="path to summary.json or its directory")
    p_slope.set_defaults(func=_cmd_slope)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
