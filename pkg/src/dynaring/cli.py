"""``dynaring`` command line: run, sweep, demo-impossible, verify.

Exit codes: 0 when every requested check passes, 1 on a check failure,
2 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load, parse_overrides, parse_text
from .dynamics import diagnose
from .runner import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    execute,
    matrix_lines,
    parse_axis,
    sweep,
)

STALL_WINDOW = 1000


def _load_config(args) -> ExperimentConfig:
    """``--config`` takes a config file or a saved summary record (JSON), then applies overrides."""
    cfg = None
    if args.config:
        text = Path(args.config).read_text()
        if text.lstrip().startswith("{"):
            try:
                text = json.loads(text)["config"]
            except (ValueError, KeyError):
                raise ConfigError(f"{args.config}: not a summary record") from None
        cfg = parse_text(text)
    else:
        cfg = load(None)
    overrides = parse_overrides(args.set)
    if args.seed is not None:
        overrides["schedule.seed"] = str(args.seed)
    if args.horizon is not None:
        overrides["run.horizon"] = str(args.horizon)
    return cfg.with_overrides(overrides)


def _emit(record, out) -> None:
    for line in record.verdicts:
        print(line, file=out)
    if record.error:
        print(f"error: {record.error}", file=sys.stderr)
    print(record.to_json(), file=out)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    record, _ = execute(cfg, trace_path=args.trace)
    _emit(record, sys.stdout)
    if args.summary:
        Path(args.summary).write_text(record.to_json() + "\n")
    return record.exit_code


def cmd_sweep(args) -> int:
    template = _load_config(args)
    axes = [parse_axis(a) for a in args.axis or []]
    records = []
    sink = open(args.out, "w") if args.out else None
    try:
        for record in sweep(template, axes, seeds=args.seeds):
            records.append(record)
            if sink is not None:
                sink.write(record.to_json() + "\n")
    finally:
        if sink is not None:
            sink.close()
    for line in matrix_lines(records, axes):
        print(line)
    failed = sum(r.status == "check_failed" for r in records)
    errors = sum(r.status == "config_error" for r in records)
    print(f"sweep runs={len(records)} failed={failed} config_errors={errors}")
    if records and errors == len(records):
        return EXIT_CONFIG_ERROR
    return EXIT_CHECK_FAILED if failed else EXIT_OK


_DEMOS = {"one_robot": (1, 3, "one_robot_confiner"), "two_robots": (2, 4, "two_robot_confiner")}


def cmd_demo_impossible(args) -> int:
    k, min_n, kind = _DEMOS[args.which]
    n = args.n if args.n is not None else (5 if k == 1 else 8)
    if n < min_n:
        print(f"error: {args.which} demo needs n >= {min_n}, got n={n}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    overrides = {
        "ring.n": str(n),
        "robots.k": str(k),
        "robots.algorithm": args.algorithm,
        "robots.chirality": args.chirality,
        "schedule.kind": kind,
        "schedule.anchor": str(args.anchor),
        "run.horizon": str(args.horizon if args.horizon is not None else 100_000),
        "checks.list": "confinement",
    }
    if args.seed is not None:
        overrides["schedule.seed"] = str(args.seed)
    cfg = load(None).with_overrides(overrides)
    record, trace = execute(cfg, trace_path=args.trace)
    if trace is not None:
        diag = diagnose(trace, STALL_WINDOW)
        report = trace.schedule_report or {}
        visited = record.coverage["visited"]
        print(f"visited={','.join(map(str, visited))} size={len(visited)}")
        print(
            f"phase_advances={report.get('phase_advances', 0)} stalled={str(report.get('stalled', False)).lower()} "
            f"longest_absence={max(diag.longest_absence)} open_absence={max(diag.open_absence)}"
        )
    _emit(record, sys.stdout)
    return record.exit_code


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (key = value lines) or a saved summary record")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="schedule seed (u64)")
    p.add_argument("--horizon", type=int, help="number of rounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynaring", description="Perpetual exploration of highly dynamic rings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one configured run")
    _common(p)
    p.add_argument("--trace", help="write the line-oriented trace here")
    p.add_argument("--summary", help="also write the summary record here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Cartesian product of runs over config axes")
    _common(p)
    p.add_argument("--axis", action="append", metavar="KEY=VALUES", help="e.g. ring.n=4..10 or robots.chirality=uniform,alternating")
    p.add_argument("--seeds", type=int, default=1, help="derived seeds per cell")
    p.add_argument("--out", help="write one summary record per line here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo-impossible", help="confiner adversary against an under-provisioned team")
    p.add_argument("which", choices=sorted(_DEMOS))
    p.add_argument("--n", type=int)
    p.add_argument("--algorithm", default="pef3plus")
    p.add_argument("--chirality", default="alternating")
    p.add_argument("--anchor", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_demo_impossible)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true", help="reduced seed counts")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
