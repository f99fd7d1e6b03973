"""Experiment configuration: a flat ``section.key = value`` text format.

Every key has a declared type and default.  Unknown keys and malformed values
are rejected before anything runs.  The canonical text (all keys, sorted, in
normal form) is what the digest covers, so two configs with equal digests
describe the same run.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import (
    Bernoulli,
    BoundedRecurrence,
    EdgeSchedule,
    EventualMissing,
    OneRobotConfiner,
    Periodic,
    Static,
    TwoRobotConfiner,
    derive_seed,
    load_scripted,
)
from .engine import Configuration, init
from .ring import CW, RingSpec
from .robots import Algorithm, Chirality


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "on", "yes", "1"):
        return True
    if low in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    return int(text.strip(), 0)


def _uint64(text: str) -> int:
    v = _int(text)
    if not 0 <= v < 1 << 64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def _str(text: str) -> str:
    return text.strip()


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        s = text.strip().lower()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return s

    return parse


def _words(text: str) -> str:
    """Comma list, normalized: no blanks around commas."""
    return ",".join(part.strip() for part in text.split(",") if part.strip())


SCHEDULE_KINDS = (
    "static",
    "periodic",
    "bernoulli",
    "bounded_recurrence",
    "eventual_missing",
    "scripted",
    "one_robot_confiner",
    "two_robot_confiner",
)
BASE_KINDS = ("static", "periodic", "bernoulli", "bounded_recurrence")
CHECKS = ("max_tower", "opposite_dirs", "sentinels", "coverage", "confinement", "has_moved", "constant_headings")

# key -> (parser, default text)
SCHEMA: dict[str, tuple[Callable[[str], object], str]] = {
    "ring.n": (_int, "4"),
    "ring.size2_multigraph": (_bool, "false"),
    "robots.k": (_int, "3"),
    "robots.algorithm": (lambda s: Algorithm.parse(s.strip()).value, "pef3plus"),
    "robots.positions": (_words, "spread"),
    "robots.chirality": (_words, "alternating"),
    "schedule.kind": (_choice(*SCHEDULE_KINDS), "static"),
    "schedule.seed": (_uint64, "0"),
    "schedule.p": (float, "0.5"),
    "schedule.bound": (_int, "8"),
    "schedule.edge": (_str, "random"),
    "schedule.t_remove": (_int, "100"),
    "schedule.base": (_choice(*BASE_KINDS), "static"),
    "schedule.file": (_str, ""),
    "schedule.period": (_words, ""),
    "schedule.anchor": (_int, "0"),
    "run.horizon": (_int, "10000"),
    "run.trace_emit": (_bool, "off"),
    "run.trace_cap": (_int, "1000000"),
    "checks.list": (_words, "coverage"),
    "checks.min_epochs": (_int, "1"),
    "checks.max_gap": (_int, "0"),
    "checks.sentinel_tail": (_int, "1000"),
    "checks.allowed": (_words, "auto"),
    "checks.inconclusive_passes": (_bool, "true"),
}


def _canon(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple[tuple[str, object], ...]

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def as_dict(self) -> dict:
        return dict(self.values)

    def with_overrides(self, overrides: dict[str, str]) -> ExperimentConfig:
        merged = {k: _canon(v) for k, v in self.values}
        merged.update(overrides)
        return parse_mapping(merged)

    def canonical_text(self) -> str:
        return "".join(f"{k} = {_canon(v)}\n" for k, v in self.values)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    @property
    def checks(self) -> list[str]:
        return [c for c in self["checks.list"].split(",") if c]


def parse_mapping(raw: dict[str, str]) -> ExperimentConfig:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = {}
    for key, (parser, default) in SCHEMA.items():
        text = raw.get(key, default)
        try:
            values[key] = parser(str(text))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    for name in values["checks.list"].split(","):
        if name and name not in CHECKS:
            raise ConfigError(f"checks.list: unknown check {name!r} (known: {', '.join(CHECKS)})")
    return ExperimentConfig(tuple(sorted(values.items())))


def parse_text(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return parse_mapping(raw)


def parse_overrides(items: list[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def load(path: str | Path | None, overrides: list[str] | None = None) -> ExperimentConfig:
    base = parse_text(Path(path).read_text()) if path else parse_mapping({})
    return base.with_overrides(parse_overrides(overrides))


# --------------------------------------------------------------------------
# Building run inputs from a config


@dataclass
class RunInputs:
    ring: RingSpec
    schedule: EdgeSchedule
    initial: Configuration
    horizon: int
    trace_cap: int
    seeds: dict
    missing_edge: int | None = None
    t_remove: int | None = None


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected a keyword or a comma list of integers, got {text!r}") from None


def spread_positions(n: int, k: int) -> list[int]:
    return [i * n // k for i in range(k)]


def _positions(cfg: ExperimentConfig, ring: RingSpec, k: int) -> list[int]:
    spec = cfg["robots.positions"]
    kind = cfg["schedule.kind"]
    if spec == "spread":
        if kind.endswith("_confiner"):
            # the confiners start from u (and its CW neighbour)
            u = cfg["schedule.anchor"]
            return [u, ring.neighbor(u, CW)][:k]
        return spread_positions(ring.n, k)
    if spec == "random":
        rng = np.random.default_rng(derive_seed(cfg["schedule.seed"], 1))
        return sorted(int(x) for x in rng.choice(ring.n, size=k, replace=False))
    pos = _ints(spec, "robots.positions")
    if len(pos) != k:
        raise ConfigError(f"robots.positions lists {len(pos)} nodes for k={k}")
    return pos


def chirality_pattern(pattern: str, k: int, seed: int) -> list[bool]:
    if pattern == "uniform":
        return [True] * k
    if pattern == "alternating":
        return [i % 2 == 0 for i in range(k)]
    if pattern == "random":
        rng = np.random.default_rng(derive_seed(seed, 2))
        return [bool(b) for b in rng.integers(0, 2, size=k)]
    bits = pattern.split(",")
    if len(bits) != k or any(b not in ("cw", "ccw", "1", "0") for b in bits):
        raise ConfigError(
            f"robots.chirality: expected uniform, alternating, random or {k} of cw/ccw, got {pattern!r}"
        )
    return [b in ("cw", "1") for b in bits]


def _base_schedule(kind: str, cfg: ExperimentConfig, ring: RingSpec, seed: int) -> EdgeSchedule:
    if kind == "static":
        return Static(ring)
    if kind == "periodic":
        table = [row for row in cfg["schedule.period"].split(",") if row]
        if not table:
            raise ConfigError("schedule.period: periodic schedule needs rows such as 1111,0111")
        return Periodic(ring, table)
    if kind == "bernoulli":
        return Bernoulli(ring, cfg["schedule.p"], seed)
    if kind == "bounded_recurrence":
        return BoundedRecurrence(ring, cfg["schedule.bound"], seed, cfg["schedule.p"])
    raise ConfigError(f"schedule.base: {kind!r} cannot serve as a base schedule")


def build(cfg: ExperimentConfig) -> RunInputs:
    """Validate cross-field rules and construct the ring, schedule and initial configuration."""
    try:
        ring = RingSpec(cfg["ring.n"], cfg["ring.size2_multigraph"])
    except ValueError as exc:
        raise ConfigError(f"ring: {exc}") from None
    k = cfg["robots.k"]
    if k < 1:
        raise ConfigError(f"robots.k must be >= 1, got {k}")
    if k >= ring.n:
        raise ConfigError(f"robots.k={k} violates k < n (n={ring.n}): a run needs strictly fewer robots than nodes")
    horizon = cfg["run.horizon"]
    if horizon < 0:
        raise ConfigError("run.horizon must be >= 0")
    if cfg["run.trace_cap"] < 0:
        raise ConfigError("run.trace_cap must be >= 0")
    seed = cfg["schedule.seed"]
    kind = cfg["schedule.kind"]

    missing = t_remove = None
    try:
        if kind in BASE_KINDS:
            schedule = _base_schedule(kind, cfg, ring, seed)
        elif kind == "eventual_missing":
            edge = cfg["schedule.edge"]
            if edge == "random":
                missing = int(derive_seed(seed, 3) % ring.edge_count)
            else:
                missing = ring.check_edge(_ints(edge, "schedule.edge")[0])
            t_remove = cfg["schedule.t_remove"]
            if t_remove < 0:
                raise ConfigError("schedule.t_remove must be >= 0")
            schedule = EventualMissing(_base_schedule(cfg["schedule.base"], cfg, ring, seed), missing, t_remove)
        elif kind == "scripted":
            if not cfg["schedule.file"]:
                raise ConfigError("schedule.file is required for scripted schedules")
            try:
                schedule = load_scripted(cfg["schedule.file"], ring, _base_schedule(cfg["schedule.base"], cfg, ring, seed))
            except OSError as exc:
                raise ConfigError(f"schedule.file: {exc}") from None
        elif kind == "one_robot_confiner":
            if k != 1 or ring.n < 3:
                raise ConfigError("one_robot_confiner needs k = 1 and n >= 3")
            schedule = OneRobotConfiner(ring, cfg["schedule.anchor"])
        else:
            if k != 2 or ring.n < 4:
                raise ConfigError("two_robot_confiner needs k = 2 and n >= 4")
            schedule = TwoRobotConfiner(ring, cfg["schedule.anchor"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None

    positions = _positions(cfg, ring, k)
    chirality = chirality_pattern(cfg["robots.chirality"], k, seed)
    if kind.endswith("_confiner"):
        u = cfg["schedule.anchor"]
        want = [u] if k == 1 else [u, ring.neighbor(u, CW)]
        if positions != want:
            raise ConfigError(f"{kind} with anchor {u} needs robots.positions = {','.join(map(str, want))}")
    try:
        initial = init(ring, k, positions, [Chirality(c) for c in chirality], Algorithm(cfg["robots.algorithm"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunInputs(
        ring=ring,
        schedule=schedule,
        initial=initial,
        horizon=horizon,
        trace_cap=cfg["run.trace_cap"],
        seeds={"schedule": seed},
        missing_edge=missing,
        t_remove=t_remove,
    )
