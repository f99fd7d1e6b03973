"""Config-driven runs and sweeps producing replayable summary records."""
from __future__ import annotations

import hashlib
import itertools
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

from . import analysis
from .config import ConfigError, ExperimentConfig, build
from .dynamics import derive_seed
from .engine import ExecutionTrace, UnsupportedSizeWarning, run

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


@dataclass
class SummaryRecord:
    digest: str
    config: str
    seeds: dict
    status: str  # ok | check_failed | config_error
    coverage: dict | None = None
    verdicts: list[str] = field(default_factory=list)
    schedule: dict | None = None
    trace_sha256: str | None = None
    wall_clock: str = "0.000"
    error: str | None = None
    cell: dict | None = None

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "check_failed": EXIT_CHECK_FAILED}.get(self.status, EXIT_CONFIG_ERROR)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> SummaryRecord:
        return cls(**json.loads(text))


def evaluate_checks(cfg: ExperimentConfig, trace: ExecutionTrace, inputs) -> list[analysis.InvariantReport]:
    reports = []
    for name in cfg.checks:
        try:
            reports.append(_check(name, cfg, trace, inputs))
        except ValueError as exc:  # not enough per-round detail kept
            reports.append(analysis.InvariantReport(name, "inconclusive", detail=str(exc)))
    return reports


def _check(name: str, cfg: ExperimentConfig, trace: ExecutionTrace, inputs) -> analysis.InvariantReport:
    if name == "max_tower":
        return analysis.check_max_tower(trace)
    if name == "opposite_dirs":
        return analysis.check_tower_opposite_dirs(trace)
    if name == "has_moved":
        return analysis.check_has_moved_consistency(trace)
    if name == "constant_headings":
        return analysis.check_constant_headings(trace)
    if name == "sentinels":
        return analysis.check_sentinels(trace, inputs.missing_edge, inputs.t_remove, cfg["checks.sentinel_tail"])
    if name == "confinement":
        return analysis.check_confinement(trace, allowed_nodes(cfg, inputs))
    if name == "coverage":
        stats = analysis.coverage(trace)
        limit = cfg["checks.max_gap"]
        ok = stats.epochs_completed >= cfg["checks.min_epochs"] and (limit <= 0 or stats.worst_gap < limit)
        detail = f"epochs={stats.epochs_completed} worst_gap={stats.worst_gap}"
        if ok:
            return analysis.InvariantReport("coverage", "pass", detail=detail)
        return analysis.InvariantReport("coverage", "fail", trace.horizon, {"seed": trace.meta.get("seed")}, detail)
    raise ConfigError(f"unknown check {name!r}")


def allowed_nodes(cfg: ExperimentConfig, inputs) -> frozenset[int]:
    spec = cfg["checks.allowed"]
    if spec == "auto":
        if not hasattr(inputs.schedule, "allowed_nodes"):
            raise ConfigError("checks.allowed = auto only applies to confiner schedules")
        return inputs.schedule.allowed_nodes()
    try:
        return frozenset(int(x) for x in spec.split(","))
    except ValueError:
        raise ConfigError(f"checks.allowed: expected auto or a node list, got {spec!r}") from None


def _validate_checks(cfg: ExperimentConfig, inputs) -> None:
    if "sentinels" in cfg.checks and inputs.missing_edge is None:
        raise ConfigError("the sentinels check needs schedule.kind = eventual_missing")
    if "confinement" in cfg.checks and cfg["checks.allowed"] == "auto" and not hasattr(inputs.schedule, "allowed_nodes"):
        raise ConfigError("checks.allowed = auto only applies to confiner schedules")


def execute(
    cfg: ExperimentConfig, trace_path: str | Path | None = None, cell: dict | None = None
) -> tuple[SummaryRecord, ExecutionTrace | None]:
    """One run: build, execute, check.  Config errors come back as a record, not an exception."""
    start = time.perf_counter()
    seeds = {"schedule": cfg["schedule.seed"]}
    try:
        inputs = build(cfg)
        _validate_checks(cfg, inputs)
    except ConfigError as exc:
        return SummaryRecord(cfg.digest, cfg.canonical_text(), seeds, "config_error", error=str(exc), cell=cell), None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsupportedSizeWarning)
        trace = run(
            inputs.ring,
            inputs.schedule,
            inputs.initial,
            inputs.horizon,
            trace_cap=inputs.trace_cap,
            meta={"seed": seeds["schedule"], "digest": cfg.digest},
        )
    reports = evaluate_checks(cfg, trace, inputs)
    tolerate = cfg["checks.inconclusive_passes"]
    ok = all(r.verdict == "pass" or (r.verdict == "inconclusive" and tolerate) for r in reports)

    digest = None
    if cfg["run.trace_emit"] or trace_path is not None:
        text = trace.text()
        digest = hashlib.sha256(text.encode()).hexdigest()
        if trace_path is not None:
            Path(trace_path).write_text(text)
    schedule = dict(inputs.schedule.describe())
    if trace.schedule_report is not None:
        schedule["report"] = trace.schedule_report
    if inputs.missing_edge is not None:
        schedule["missing_edge"] = inputs.missing_edge
    record = SummaryRecord(
        digest=cfg.digest,
        config=cfg.canonical_text(),
        seeds=seeds,
        status="ok" if ok else "check_failed",
        coverage=analysis.coverage(trace).as_dict(),
        verdicts=[r.line() for r in reports],
        schedule=schedule,
        trace_sha256=digest,
        wall_clock=f"{time.perf_counter() - start:.3f}",
        cell=cell,
    )
    return record, trace


# --------------------------------------------------------------------------
# Sweeps


def parse_axis(item: str) -> tuple[str, list[str]]:
    """``key=a,b,c`` or ``key=lo..hi`` (inclusive integer range)."""
    if "=" not in item:
        raise ConfigError(f"--axis expects key=values, got {item!r}")
    key, spec = (s.strip() for s in item.split("=", 1))
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        try:
            values = [str(v) for v in range(int(lo), int(hi) + 1)]
        except ValueError:
            raise ConfigError(f"--axis {key}: bad range {spec!r}") from None
    else:
        values = [v.strip() for v in spec.split(",") if v.strip()]
    if not values:
        raise ConfigError(f"--axis {key}: no values")
    return key, values


def sweep_cells(template: ExperimentConfig, axes: list[tuple[str, list[str]]], seeds: int = 1) -> list[dict]:
    """Cartesian product of the axes; with ``seeds > 1`` each cell repeats with derived schedule seeds."""
    keys = [k for k, _ in axes]
    cells = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        cell = dict(zip(keys, combo))
        if seeds > 1:
            base = int(cell.get("schedule.seed", template["schedule.seed"]))
            for i in range(seeds):
                cells.append({**cell, "schedule.seed": str(derive_seed(base, i))})
        else:
            cells.append(cell)
    return cells


def _run_cell(args) -> str:
    text, cell = args
    from .config import parse_text

    template = parse_text(text)
    try:
        cfg = template.with_overrides(cell)
    except ConfigError as exc:
        return SummaryRecord(template.digest, text, {}, "config_error", error=str(exc), cell=cell).to_json()
    record, _ = execute(cfg, cell=cell)
    return record.to_json()


def worker_count(cells: int) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get("DYNARING_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"DYNARING_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, cells))


def sweep(template: ExperimentConfig, axes, seeds: int = 1) -> Iterator[SummaryRecord]:
    """Run every cell, yielding records in cell order whatever the worker count."""
    cells = sweep_cells(template, axes, seeds)
    jobs = [(template.canonical_text(), cell) for cell in cells]
    workers = worker_count(len(jobs))
    if workers == 1:
        for job in jobs:
            yield SummaryRecord.from_json(_run_cell(job))
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for text in pool.map(_run_cell, jobs):
            yield SummaryRecord.from_json(text)


def matrix_lines(records: list[SummaryRecord], axes) -> list[str]:
    """Aggregated pass/fail counts per axis combination (seeds folded)."""
    keys = [k for k, _ in axes]
    groups: dict[tuple, list[int]] = {}
    for rec in records:
        cell = rec.cell or {}
        key = tuple(cell.get(k, "-") for k in keys)
        counts = groups.setdefault(key, [0, 0, 0])
        counts[{"ok": 0, "check_failed": 1}.get(rec.status, 2)] += 1
    lines = []
    for key, (ok, bad, err) in groups.items():
        label = " ".join(f"{k}={v}" for k, v in zip(keys, key)) or "single"
        lines.append(f"cell {label} pass={ok} fail={bad} config_error={err}")
    return lines
