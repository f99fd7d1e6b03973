"""FSYNC execution: synchronous Look, Compute, Move rounds and trace recording.

Round ``t`` reads ``E_t`` both for Look and for Move.  Robots crossing the
same edge in opposite directions swap places without meeting.

:func:`step` is the reference implementation over value objects.  :func:`run`
uses it for adaptive schedules and a compiled loop over arrays for oblivious
ones; both produce identical traces.
"""
from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernel
from .dynamics import EdgePresenceTracker, EdgeSchedule
from .ring import RingSpec
from .robots import LEFT, RIGHT, Algorithm, Chirality, RobotState, View, compute
from .tracking import CoverageAccumulator, TowerRecord, TowerTracker, groups_of

DEFAULT_TRACE_CAP = 1_000_000
CHUNK = 1 << 14


class UnsupportedSizeWarning(UserWarning):
    """Team/ring size outside the range where the algorithm is proven correct."""


_PROVEN = {
    Algorithm.PEF3PLUS: lambda k, n: k >= 3 and n > k,
    Algorithm.PEF2: lambda k, n: (k, n) == (2, 3),
    Algorithm.PEF1: lambda k, n: (k, n) == (1, 2),
}


@dataclass(frozen=True)
class Configuration:
    positions: tuple[int, ...]
    states: tuple[RobotState, ...]
    round: int = 0

    @property
    def k(self) -> int:
        return len(self.positions)


def init(
    spec: RingSpec,
    k: int,
    positions: Sequence[int],
    chiralities: Sequence[Chirality | bool],
    algorithm: Algorithm | str | Sequence[Algorithm] = Algorithm.PEF3PLUS,
) -> Configuration:
    """Well-initiated configuration: ``1 <= k < n`` robots on distinct nodes, all pointing left."""
    if k < 1:
        raise ValueError(f"need at least one robot, got k={k}")
    if k >= spec.n:
        raise ValueError(f"k must be strictly less than the number of nodes (k={k}, n={spec.n})")
    if len(positions) != k or len(chiralities) != k:
        raise ValueError(f"expected {k} positions and chiralities")
    for u in positions:
        spec.check_node(u)
    if len(set(positions)) != k:
        raise ValueError(f"initial configuration must be towerless, got positions {list(positions)}")
    if isinstance(algorithm, (str, Algorithm)):
        algorithms = [Algorithm.parse(algorithm)] * k
    else:
        algorithms = [Algorithm.parse(a) for a in algorithm]
    for alg in set(algorithms):
        if not _PROVEN[alg](k, spec.n):
            warnings.warn(
                f"{alg.value} with k={k} on n={spec.n} is outside its proven range",
                UnsupportedSizeWarning,
                stacklevel=2,
            )
    states = tuple(
        RobotState(
            dir=LEFT,
            has_moved_previous_step=False,
            chirality=c if isinstance(c, Chirality) else Chirality(bool(c)),
            algorithm=alg,
        )
        for c, alg in zip(chiralities, algorithms)
    )
    return Configuration(tuple(int(u) for u in positions), states, 0)


@dataclass(frozen=True)
class StepResult:
    config: Configuration
    moved: tuple[bool, ...]
    towers: dict[int, tuple[int, ...]]


def look(spec: RingSpec, config: Configuration, edges, i: int, counts=None) -> View:
    p = config.positions[i]
    g = config.states[i].heading
    if counts is None:
        counts = Counter(config.positions)
    return View(
        exists_edge_dir=spec.port_edge(p, g) in edges,
        exists_edge_opp=spec.port_edge(p, g.opposite) in edges,
        others_on_node=counts[p] > 1,
    )


def step(spec: RingSpec, config: Configuration, edges) -> StepResult:
    counts = Counter(config.positions)
    views = [look(spec, config, edges, i, counts) for i in range(config.k)]
    states = tuple(compute(s, v) for s, v in zip(config.states, views))
    positions, moved = [], []
    for p, s in zip(config.positions, states):
        g = s.heading
        if spec.port_edge(p, g) in edges:
            positions.append(spec.neighbor(p, g))
            moved.append(True)
        else:
            positions.append(p)
            moved.append(False)
    nxt = Configuration(tuple(positions), states, config.round + 1)
    return StepResult(nxt, tuple(moved), groups_of(positions))


def _state_arrays(config: Configuration):
    dirs = np.array([s.dir is RIGHT for s in config.states], dtype=bool)
    hmp = np.array([s.has_moved_previous_step for s in config.states], dtype=bool)
    return np.array(config.positions, dtype=np.int64), dirs, hmp


@dataclass
class ExecutionTrace:
    """Full record of one execution.

    Per-round arrays cover the first ``detail_rounds`` rounds: ``edges[t]`` is
    ``E_t``, ``positions[t]``/``dirs[t]``/``has_moved[t]`` describe the
    configuration before round ``t`` (so row ``t + 1`` is the post-Compute
    state of round ``t``) and ``moved[t]`` flags actual traversals.  Towers,
    coverage and edge statistics always span the whole horizon.
    """

    ring: RingSpec
    horizon: int
    chirality: np.ndarray
    algorithms: tuple[Algorithm, ...]
    edges: np.ndarray
    positions: np.ndarray
    dirs: np.ndarray
    has_moved: np.ndarray
    moved: np.ndarray
    towers: list[TowerRecord]
    coverage_acc: CoverageAccumulator
    edge_stats: EdgePresenceTracker
    meta: dict = field(default_factory=dict)
    schedule_report: dict | None = None

    @property
    def k(self) -> int:
        return self.positions.shape[1]

    @property
    def detail_rounds(self) -> int:
        return len(self.edges)

    @property
    def truncated(self) -> bool:
        return self.detail_rounds < self.horizon

    def require_detail(self, configs: int | None = None) -> ExecutionTrace:
        need = self.horizon + 1 if configs is None else configs
        if len(self.positions) < need:
            raise ValueError(
                f"trace keeps per-round detail for {self.detail_rounds} of {self.horizon} rounds; "
                "rerun with a larger trace cap"
            )
        return self

    def headings_cw(self, rows: slice | np.ndarray = slice(None)) -> np.ndarray:
        """True where a robot's direction (at configuration row) is global CW."""
        return self.dirs[rows] == self.chirality

    def configuration(self, t: int) -> Configuration:
        self.require_detail(t + 1)
        states = tuple(
            RobotState(
                dir=RIGHT if self.dirs[t, i] else LEFT,
                has_moved_previous_step=bool(self.has_moved[t, i]),
                chirality=Chirality(bool(self.chirality[i])),
                algorithm=self.algorithms[i],
            )
            for i in range(self.k)
        )
        return Configuration(tuple(int(p) for p in self.positions[t]), states, t)

    def lines(self) -> Iterator[str]:
        """Line-oriented text form, one line per round.

        Each robot entry gives its node at the start of the round, its
        post-Compute local and global direction, and whether it moved;
        ``TW`` lists towers at the start of the round (``-`` when none).
        A truncated trace yields only the rounds it kept.
        """
        cw = self.headings_cw()
        for t in range(self.detail_rounds):
            bits = "".join("1" if b else "0" for b in self.edges[t])
            robots = ";".join(
                f"{self.positions[t, i]},{'r' if self.dirs[t + 1, i] else 'l'},"
                f"{'CW' if cw[t + 1, i] else 'CCW'},{int(self.moved[t, i])}"
                for i in range(self.k)
            )
            towers = groups_of(self.positions[t])
            tw = ";".join(f"{node}:{len(m)}" for node, m in sorted(towers.items())) or "-"
            yield f"t={t} E={bits} R={robots} TW={tw}"

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text())

    @classmethod
    def from_arrays(
        cls,
        ring: RingSpec,
        positions,
        dirs,
        chirality,
        *,
        edges=None,
        has_moved=None,
        moved=None,
        algorithm: Algorithm = Algorithm.PEF3PLUS,
        meta: dict | None = None,
    ) -> ExecutionTrace:
        """Assemble a trace from explicit arrays, e.g. a hand-written fixture."""
        positions = np.asarray(positions, dtype=np.int64)
        dirs = np.asarray(dirs, dtype=bool)
        chirality = np.asarray(chirality, dtype=bool)
        horizon = len(positions) - 1
        k = positions.shape[1]
        if edges is None:
            edges = np.ones((horizon, ring.edge_count), dtype=bool)
        edges = np.asarray(edges, dtype=bool)
        has_moved = np.zeros_like(dirs) if has_moved is None else np.asarray(has_moved, dtype=bool)
        if moved is None:
            moved = positions[1:] != positions[:-1]
        trace = cls(
            ring=ring,
            horizon=horizon,
            chirality=chirality,
            algorithms=(algorithm,) * k,
            edges=edges,
            positions=positions,
            dirs=dirs,
            has_moved=has_moved,
            moved=np.asarray(moved, dtype=bool),
            towers=[],
            coverage_acc=CoverageAccumulator(ring.n),
            edge_stats=EdgePresenceTracker(ring.edge_count),
            meta=dict(meta or {}),
        )
        trace.edge_stats.update(edges)
        trace.coverage_acc.feed(positions)
        tracker = TowerTracker()
        tracker.feed(0, positions)
        trace.towers = tracker.finish(horizon)
        return trace


def run(
    spec: RingSpec,
    schedule: EdgeSchedule,
    initial: Configuration,
    horizon: int,
    *,
    trace_cap: int = DEFAULT_TRACE_CAP,
    fast: bool = True,
    meta: dict | None = None,
) -> ExecutionTrace:
    """Execute ``horizon`` rounds from ``initial`` under ``schedule``."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if schedule.ring != spec:
        raise ValueError("schedule was built for a different ring")
    k = initial.k
    m = spec.edge_count
    keep = min(horizon, trace_cap)
    chirality = np.array([s.chirality.right_is_cw for s in initial.states], dtype=bool)
    algorithms = tuple(s.algorithm for s in initial.states)
    algo = np.array([a.code for a in algorithms], dtype=np.int64)
    cw_tab, ccw_tab = (np.array(t, dtype=np.int64) for t in spec.port_tables())

    d_edges = np.zeros((keep, m), dtype=bool)
    d_pos = np.zeros((keep + 1, k), dtype=np.int64)
    d_dirs = np.zeros((keep + 1, k), dtype=bool)
    d_hmp = np.zeros((keep + 1, k), dtype=bool)
    d_moved = np.zeros((keep, k), dtype=bool)

    coverage = CoverageAccumulator(spec.n)
    edge_stats = EdgePresenceTracker(m)
    towers = TowerTracker()
    schedule.reset()

    cur_pos, cur_dirs, cur_hmp = _state_arrays(initial)
    config = initial
    compiled = fast and not schedule.adaptive
    t = 0
    while t < horizon:
        t1 = min(horizon, t + CHUNK)
        span = t1 - t
        pos = np.empty((span + 1, k), dtype=np.int64)
        dirs = np.empty((span + 1, k), dtype=bool)
        hmp = np.empty((span + 1, k), dtype=bool)
        moved = np.zeros((span, k), dtype=bool)
        pos[0], dirs[0], hmp[0] = cur_pos, cur_dirs, cur_hmp
        if compiled:
            edges = np.ascontiguousarray(schedule.block(t, t1), dtype=bool)
            _kernel.run_rounds(edges, spec.n, cw_tab, ccw_tab, chirality, algo, pos, dirs, hmp, moved)
        else:
            edges = np.zeros((span, m), dtype=bool)
            for j in range(span):
                present = schedule.edges_at(t + j, config)
                edges[j, sorted(present)] = True
                res = step(spec, config, present)
                config = res.config
                pos[j + 1], dirs[j + 1], hmp[j + 1] = _state_arrays(config)
                moved[j] = res.moved

        edge_stats.update(edges)
        coverage.feed(pos[:span])
        towers.feed(t, pos[:span])
        if t < keep:
            n_keep = min(keep, t1) - t
            d_edges[t:t + n_keep] = edges[:n_keep]
            d_moved[t:t + n_keep] = moved[:n_keep]
            d_pos[t:t + n_keep + 1] = pos[:n_keep + 1]
            d_dirs[t:t + n_keep + 1] = dirs[:n_keep + 1]
            d_hmp[t:t + n_keep + 1] = hmp[:n_keep + 1]
        cur_pos, cur_dirs, cur_hmp = pos[span], dirs[span], hmp[span]
        if compiled:
            config = None
        t = t1

    if keep == 0:
        d_pos[0], d_dirs[0], d_hmp[0] = cur_pos, cur_dirs, cur_hmp
    final = cur_pos.reshape(1, k)
    coverage.feed(final)
    towers.feed(horizon, final)

    report = None
    if hasattr(schedule, "report"):
        report = schedule.report(horizon)
    return ExecutionTrace(
        ring=spec,
        horizon=horizon,
        chirality=chirality,
        algorithms=algorithms,
        edges=d_edges,
        positions=d_pos,
        dirs=d_dirs,
        has_moved=d_hmp,
        moved=d_moved,
        towers=towers.finish(horizon),
        coverage_acc=coverage,
        edge_stats=edge_stats,
        meta=dict(meta or {}),
        schedule_report=report,
    )
