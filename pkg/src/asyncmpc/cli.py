"""Command line front end.

    asyncmpc run <config.json> [--out report.json] [--seeds N] [--jobs K]

The config holds one scenario object or {"scenarios": [...]}. With
--out the JSON report is written there, a CSV summary of the same rows
lands next to it and a PNG chart of per-scenario outcomes next to that;
without --out the report JSON goes to stdout. Progress and timing are
printed to stderr so the report stream stays clean.

Exit status: 0 every trial clean, 1 at least one invariant violation,
2 the config could not be read or failed validation.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from .harness import ScenarioError, report_bytes, run_config

__all__ = ["main"]


def _csv_rows(reports_data):
    head = ["index", "protocol", "n", "layer", "security", "strategy",
            "trials", "successes", "failures", "violations",
            "error_estimate", "wilson_low", "wilson_high"]
    rows = [head]
    for idx, r in enumerate(reports_data):
        sc = r["scenario"]
        lo, hi = r["error_rate"]["wilson_3sigma"]
        rows.append([idx, sc["protocol"], sc["n"], sc["mode"]["layer"],
                     sc["mode"]["security"], sc["strategy"], r["trials"],
                     r["successes"], r["failures"], r["violations"],
                     r["error_rate"]["estimate"], lo, hi])
    return rows


def _cmd_run(args):
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        reports, combined, wall = run_config(cfg, seeds_override=args.seeds,
                                             jobs=args.jobs)
    except ScenarioError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2

    payload = report_bytes(combined)
    if args.out:
        out = Path(args.out)
        out.write_bytes(payload)
        with open(out.with_suffix(".csv"), "w", newline="") as fp:
            csv.writer(fp).writerows(_csv_rows(combined["reports"]))
        from .plots import render_outcomes_figure
        render_outcomes_figure(combined["reports"], out.with_suffix(".png"))
        print(f"report: {out}", file=sys.stderr)
    else:
        sys.stdout.write(payload.decode())

    violations = 0
    for idx, data in enumerate(combined["reports"]):
        violations += data["violations"]
        sc = data["scenario"]
        print(f"[{idx}] {sc['protocol']} n={sc['n']} {sc['strategy']}: "
              f"{data['successes']}/{data['trials']} ok, "
              f"{data['failures']} failures, {data['violations']} violations",
              file=sys.stderr)
    print(f"wall time: {wall:.2f}s", file=sys.stderr)
    return 1 if violations else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="asyncmpc",
        description="batch runner for the protocol simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario config")
    run.add_argument("config", help="JSON scenario file")
    run.add_argument("--out", help="write the JSON report here (plus .csv "
                     "and .png siblings)")
    run.add_argument("--seeds", type=int, default=None,
                     help="override every scenario's seed count")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker processes for independent trials")
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    parser.error(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
