"""Command line: ``carrier-select {run,compare,validate,export}``.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    FORMATS,
    MetricsReport,
    RunConfig,
    ScenarioMismatchError,
    compare,
    export_report,
    run_with_simulation,
)
from .model import ScenarioError, load_scenario_dict, scenario_errors, scenario_from_dict
from .strategies import BUILTINS, UnknownStrategyError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file (JSON or YAML)")
    p.add_argument("--metric", choices=("latency", "throughput"), default="latency")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--epoch", type=float, default=1.0, help="sampling interval in seconds")
    p.add_argument("--no-avoidance", action="store_true",
                   help="scan back to back instead of inside sleep windows")
    p.add_argument("--platform-overhead", type=float, default=None,
                   help="extra seconds per inter-carrier attach")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carrier-select", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run one strategy and write its report")
    _common(run)
    run.add_argument("--strategy", default="tree", help=f"one of {', '.join(BUILTINS)}")
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=FORMATS, default="json")
    run.add_argument("--logs", default=None, help="directory for event/switch/monitor/verdict logs")

    cmp_ = sub.add_parser("compare", help="run several strategies on one scenario")
    _common(cmp_)
    cmp_.add_argument("--strategies", default="baseline,radio-only,profile-only,tree,optimal")
    cmp_.add_argument("--out", default=None, help="comparison table (CSV)")
    cmp_.add_argument("--gamma-out", default=None, help="per-epoch gap ratios (CSV)")

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("--scenario", required=True)

    exp = sub.add_parser("export", help="re-export a saved JSON report")
    exp.add_argument("--report", required=True)
    exp.add_argument("--format", choices=FORMATS, required=True)
    exp.add_argument("--out", required=True)
    return ap


def _config(args, strategy: str) -> RunConfig:
    return RunConfig(
        scenario=args.scenario, strategy=strategy, metric=args.metric, seed=args.seed,
        epoch=args.epoch, out=getattr(args, "out", None) if args.cmd == "run" else None,
        format=getattr(args, "format", "json"), disruption_avoidance=not args.no_avoidance,
        platform_overhead=args.platform_overhead,
    )


def _write_logs(sim, directory: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "events.ndjson").write_text("".join(line + "\n" for line in sim.engine.event_log_lines()))
    (d / "switches.json").write_text(json.dumps(sim.switch_records(), indent=1) + "\n")
    (d / "monitor.json").write_text(json.dumps(sim.monitor_log(), indent=1) + "\n")
    (d / "verdicts.json").write_text(json.dumps(sim.guard.records(), indent=1) + "\n")
    sim.profiles.to_csv(d / "profiles.csv")


def cmd_run(args) -> int:
    report, sim = run_with_simulation(_config(args, args.strategy))
    if args.logs:
        _write_logs(sim, args.logs)
    if args.out is None:
        print(report.to_json() if args.format == "json" else report.to_csv(), end="")
    else:
        print(f"{report.strategy}: hit_ratio={report.hit_ratio:.4f} "
              f"median(g+)={report.gamma_plus_median:.4f} switches={report.disruption['count']} "
              f"-> {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [s.strip() for s in args.strategies.split(",") if s.strip()]
    table = compare([_config(args, n) for n in names])
    print(table.text())
    if args.out:
        Path(args.out).write_text(table.table_csv())
    if args.gamma_out:
        Path(args.gamma_out).write_text(table.gamma_csv())
    return EXIT_OK


def cmd_validate(args) -> int:
    s = scenario_from_dict(load_scenario_dict(args.scenario))
    errs = scenario_errors(s)
    for e in errs:
        print(f"{e.code}\t{e.entity}\t{e.message}")
    if errs:
        return EXIT_INVALID
    print(f"ok: {s.name} ({len(s.networks)} networks, {len(s.cells)} cells)")
    return EXIT_OK


def cmd_export(args) -> int:
    report = MetricsReport.from_dict(json.loads(Path(args.report).read_text()))
    export_report(report, args.format, args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate,
               "export": cmd_export}[args.cmd]
    try:
        return handler(args)
    except ScenarioError as exc:
        for e in exc.errors:
            print(f"{e.code}\t{e.entity}\t{e.message}", file=sys.stderr)
        return EXIT_INVALID
    except (UnknownStrategyError, ScenarioMismatchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to the runtime exit code
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
