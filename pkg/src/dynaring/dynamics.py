"""Evolving-graph generation.

An :class:`EdgeSchedule` yields the set ``E_t`` of edges present at round ``t``.
Oblivious schedules are pure functions of ``(parameters, seed, t)`` and can
emit whole blocks of rounds as boolean matrices; adaptive schedules (the
confiners) read the current configuration before choosing ``E_t``.

Random schedules draw one counter-based hash per ``(edge, t)`` so extending
the horizon never changes earlier rounds.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ring import CCW, CW, RingSpec

FOREVER = sys.maxsize

_MASK64 = (1 << 64) - 1


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def hash_u64(seed: int, stream: int, edges, times) -> np.ndarray:
    """64-bit hash of ``(seed, stream, edge, time)``, broadcast over ``times x edges``."""
    with np.errstate(over="ignore"):
        key = _splitmix(np.array([(seed & _MASK64)], dtype=np.uint64))
        key = _splitmix(key ^ np.uint64(stream & _MASK64))
        t = np.asarray(times, dtype=np.uint64).reshape(-1, 1)
        e = np.asarray(edges, dtype=np.uint64).reshape(1, -1)
        return _splitmix(_splitmix(key ^ t) ^ e)


def uniform_draws(seed: int, stream: int, edges, times) -> np.ndarray:
    """Uniform floats in [0, 1), one per ``(time, edge)``."""
    return (hash_u64(seed, stream, edges, times) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed, e.g. for sweep cells."""
    return int(hash_u64(seed, 0x5EED, [index], [0])[0, 0])


class EdgeSchedule:
    """Base class. Subclasses implement :meth:`block` (oblivious) or :meth:`edges_at`."""

    adaptive = False
    kind = "abstract"

    def __init__(self, ring: RingSpec):
        self.ring = ring

    @property
    def edge_count(self) -> int:
        return self.ring.edge_count

    def block(self, t0: int, t1: int) -> np.ndarray:
        raise NotImplementedError

    def edges_at(self, t: int, obs=None) -> frozenset[int]:
        if self.adaptive and obs is None:
            raise ValueError(f"adaptive schedule {self.kind!r} needs the configuration of round {t}")
        row = self.block(t, t + 1)[0]
        return frozenset(int(e) for e in np.flatnonzero(row))

    def reset(self) -> None:
        """Drop any per-execution state (adaptive schedules only)."""

    def describe(self) -> dict:
        return {"kind": self.kind}


class Static(EdgeSchedule):
    kind = "static"

    def block(self, t0: int, t1: int) -> np.ndarray:
        return np.ones((t1 - t0, self.edge_count), dtype=bool)


class Periodic(EdgeSchedule):
    """Cycles through a table of edge sets: ``E_t = table[t % len(table)]``."""

    kind = "periodic"

    def __init__(self, ring: RingSpec, table: Sequence[Iterable[int] | str]):
        super().__init__(ring)
        if not table:
            raise ValueError("periodic schedule needs a non-empty table")
        rows = np.zeros((len(table), ring.edge_count), dtype=bool)
        for i, entry in enumerate(table):
            if isinstance(entry, str):
                if len(entry) != ring.edge_count or set(entry) - {"0", "1"}:
                    raise ValueError(f"bad period row {entry!r} for {ring.edge_count} edges")
                rows[i] = [c == "1" for c in entry]
            else:
                for e in entry:
                    rows[i, ring.check_edge(e)] = True
        self.table = rows

    def block(self, t0: int, t1: int) -> np.ndarray:
        return self.table[np.arange(t0, t1) % len(self.table)]

    def describe(self) -> dict:
        bits = ",".join("".join("1" if b else "0" for b in row) for row in self.table)
        return {"kind": self.kind, "period": bits}


class Bernoulli(EdgeSchedule):
    """Each edge present independently with probability ``p``. Stress only: no fairness."""

    kind = "bernoulli"

    def __init__(self, ring: RingSpec, p: float, seed: int):
        super().__init__(ring)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {p}")
        self.p = p
        self.seed = seed

    def block(self, t0: int, t1: int) -> np.ndarray:
        return uniform_draws(self.seed, 0, range(self.edge_count), range(t0, t1)) < self.p

    def describe(self) -> dict:
        return {"kind": self.kind, "p": self.p, "seed": self.seed}


class BoundedRecurrence(EdgeSchedule):
    """Bernoulli(p) presence, plus one forced presence per edge in every block of
    ``(bound + 1) // 2`` rounds.

    Any ``bound`` consecutive rounds contain a whole block, hence every edge is
    present at least once in every window of ``bound`` rounds.
    """

    kind = "bounded_recurrence"

    def __init__(self, ring: RingSpec, bound: int, seed: int, p: float = 0.5):
        super().__init__(ring)
        if bound < 1:
            raise ValueError(f"bound must be >= 1, got {bound}")
        self.bound = bound
        self.seed = seed
        self.p = p
        self.block_len = (bound + 1) // 2

    def block(self, t0: int, t1: int) -> np.ndarray:
        edges = range(self.edge_count)
        times = np.arange(t0, t1)
        present = uniform_draws(self.seed, 0, edges, times) < self.p
        blocks = times // self.block_len
        # one forced slot per (edge, block); hashing the block index keeps it pure in t
        if len(times):
            first, last = int(blocks[0]), int(blocks[-1])
            slots = hash_u64(self.seed, 1, edges, range(first, last + 1)) % np.uint64(self.block_len)
            forced = slots[blocks - first].astype(np.int64) == (times % self.block_len)[:, None]
            present |= forced
        return present

    def describe(self) -> dict:
        return {"kind": self.kind, "bound": self.bound, "seed": self.seed, "p": self.p}


@dataclass(frozen=True)
class RemovalMask:
    """Pairs ``(edge, absence_times)``; times are a ``range`` (step 1) or a set of rounds."""

    entries: tuple[tuple[int, range | frozenset[int]], ...] = ()

    @classmethod
    def of(cls, entries: Iterable[tuple[int, Iterable[int]]]) -> RemovalMask:
        norm = []
        for edge, times in entries:
            if isinstance(times, range) and times.step == 1:
                norm.append((int(edge), times))
            else:
                norm.append((int(edge), frozenset(int(t) for t in times)))
        return cls(tuple(norm))

    def removes(self, edge: int, t: int) -> bool:
        return any(e == edge and t in times for e, times in self.entries)

    def removed_at(self, t: int) -> set[int]:
        return {e for e, times in self.entries if t in times}

    def apply_block(self, block: np.ndarray, t0: int) -> np.ndarray:
        t1 = t0 + len(block)
        for e, times in self.entries:
            if isinstance(times, range):
                lo, hi = max(times.start, t0), min(times.stop, t1)
                if lo < hi:
                    block[lo - t0:hi - t0, e] = False
            else:
                rows = [t - t0 for t in times if t0 <= t < t1]
                block[rows, e] = False
        return block


class Removal(EdgeSchedule):
    """``base`` with the mask's ``(edge, times)`` pairs removed; never adds edges."""

    kind = "removal"

    def __init__(self, base: EdgeSchedule, mask: RemovalMask):
        super().__init__(base.ring)
        for e, _ in mask.entries:
            base.ring.check_edge(e)
        self.base = base
        self.mask = mask
        self.adaptive = base.adaptive

    def block(self, t0: int, t1: int) -> np.ndarray:
        return self.mask.apply_block(self.base.block(t0, t1).copy(), t0)

    def edges_at(self, t: int, obs=None) -> frozenset[int]:
        return self.base.edges_at(t, obs) - self.mask.removed_at(t)

    def reset(self) -> None:
        self.base.reset()

    def describe(self) -> dict:
        return {"kind": self.kind, "base": self.base.describe(), "mask_entries": len(self.mask.entries)}


def apply_removal(base: EdgeSchedule, mask: RemovalMask) -> EdgeSchedule:
    return Removal(base, mask)


class EventualMissing(Removal):
    """``edge`` is present as in ``base`` before ``t_remove`` and never afterwards."""

    kind = "eventual_missing"

    def __init__(self, base: EdgeSchedule, edge: int, t_remove: int):
        super().__init__(base, RemovalMask.of([(edge, range(t_remove, FOREVER))]))
        self.edge = edge
        self.t_remove = t_remove

    def describe(self) -> dict:
        return {"kind": self.kind, "edge": self.edge, "t_remove": self.t_remove, "base": self.base.describe()}


class Scripted(Removal):
    kind = "scripted"

    def describe(self) -> dict:
        return {"kind": self.kind, "base": self.base.describe(), "mask_entries": len(self.mask.entries)}


_SCRIPT_LINE = re.compile(r"^edge\s+(\d+)\s+absent\s+(\d+)\.\.(\d+)$")


def parse_scripted(text: str) -> RemovalMask:
    """Parse ``edge <id> absent <start>..<end_inclusive>`` records (``#`` comments)."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SCRIPT_LINE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: expected 'edge <id> absent <a>..<b>', got {raw!r}")
        edge, a, b = map(int, m.groups())
        if b < a:
            raise ValueError(f"line {lineno}: empty interval {a}..{b}")
        entries.append((edge, range(a, b + 1)))
    return RemovalMask.of(entries)


def format_scripted(mask: RemovalMask) -> str:
    lines = []
    for e, times in mask.entries:
        if isinstance(times, range):
            lines.append(f"edge {e} absent {times.start}..{times.stop - 1}")
        else:
            lines.extend(f"edge {e} absent {t}..{t}" for t in sorted(times))
    return "\n".join(lines) + "\n"


def load_scripted(path: str | Path, ring: RingSpec, base: EdgeSchedule | None = None) -> Scripted:
    mask = parse_scripted(Path(path).read_text())
    return Scripted(base if base is not None else Static(ring), mask)


# --------------------------------------------------------------------------
# Diagnostics over an execution trace


class EdgePresenceTracker:
    """Rolling per-edge presence statistics, fed block by block."""

    def __init__(self, edge_count: int):
        self.rounds = 0
        self.last_seen = np.full(edge_count, -1, dtype=np.int64)
        self.longest_closed = np.zeros(edge_count, dtype=np.int64)
        self.open_run = np.zeros(edge_count, dtype=np.int64)

    def update(self, block: np.ndarray) -> None:
        span = len(block)
        for e in range(block.shape[1]):
            idx = np.flatnonzero(block[:, e])
            if idx.size == 0:
                self.open_run[e] += span
                continue
            head = self.open_run[e] + idx[0]
            gaps = np.diff(idx) - 1
            inner = int(gaps.max()) if gaps.size else 0
            self.longest_closed[e] = max(self.longest_closed[e], head, inner)
            self.open_run[e] = span - 1 - idx[-1]
            self.last_seen[e] = self.rounds + idx[-1]
        self.rounds += span


@dataclass(frozen=True)
class ConnectivityDiagnosis:
    rounds: int
    window: int
    last_seen: tuple[int, ...]
    longest_closed_absence: tuple[int, ...]
    open_absence: tuple[int, ...]
    recurrent: tuple[bool, ...]
    eventual_underlying_connected_so_far: bool

    @property
    def longest_absence(self) -> tuple[int, ...]:
        return tuple(max(a, b) for a, b in zip(self.longest_closed_absence, self.open_absence))

    def absences_bounded_by(self, limit: int) -> bool:
        """True iff every absence interval in the prefix, open or closed, is shorter than ``limit``."""
        return max(self.longest_absence, default=0) < limit


def _connected(ring: RingSpec, edges: Iterable[int]) -> bool:
    parent = list(ring.nodes)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        a, b = ring.endpoints(e)
        parent[find(a)] = find(b)
    return len({find(u) for u in ring.nodes}) == 1


def diagnose(trace, window: int) -> ConnectivityDiagnosis:
    """Finite-prefix connectivity diagnosis.

    An edge is recurrent-so-far iff it was present in the last ``window`` rounds.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    stats: EdgePresenceTracker = trace.edge_stats
    cutoff = stats.rounds - window
    recurrent = tuple(bool(s >= 0 and s >= cutoff) for s in stats.last_seen)
    connected = _connected(trace.ring, (e for e, r in enumerate(recurrent) if r))
    return ConnectivityDiagnosis(
        rounds=stats.rounds,
        window=window,
        last_seen=tuple(int(x) for x in stats.last_seen),
        longest_closed_absence=tuple(int(x) for x in stats.longest_closed),
        open_absence=tuple(int(x) for x in stats.open_run),
        recurrent=recurrent,
        eventual_underlying_connected_so_far=connected,
    )


def one_edge(trace, u: int, t: int, t2: int) -> bool:
    """OneEdge(u, t, t2): one port edge of ``u`` absent throughout [t, t2], the other present throughout."""
    if t > t2:
        raise ValueError("need t <= t2")
    edges = trace.require_detail(t2 + 1).edges
    cw, ccw = trace.ring.adjacent_edges(u)
    if cw == ccw:
        return False
    a = edges[t:t2 + 1, cw]
    b = edges[t:t2 + 1, ccw]
    return bool((not a.any() and b.all()) or (not b.any() and a.all()))


# --------------------------------------------------------------------------
# Confiner adversaries


@dataclass(frozen=True)
class ConfinerState:
    ring: RingSpec
    anchor: int | None
    phase: int = 0
    phase_start: int = 0
    advances: int = 0
    longest_phase: int = 0

    def advanced(self, phase: int, t: int) -> ConfinerState:
        return replace(
            self,
            phase=phase,
            phase_start=t,
            advances=self.advances + 1,
            longest_phase=max(self.longest_phase, t - self.phase_start),
        )


def _all_but(ring: RingSpec, removed: Iterable[int]) -> frozenset[int]:
    return frozenset(ring.edges) - frozenset(removed)


def one_robot_confiner_step(state: ConfinerState, config, t: int) -> tuple[frozenset[int], ConfinerState]:
    """Keep a single robot on ``{u, v}`` with ``v`` the CCW neighbour of ``u``.

    Phase 0: robot on ``u``, its CW edge is removed.  Phase 1: robot on ``v``,
    its CCW edge is removed.  Each phase ends when the robot crosses the one
    remaining edge.
    """
    positions = tuple(config.positions)
    if len(positions) != 1:
        raise ValueError(f"one-robot confiner needs exactly 1 robot, got {len(positions)}")
    ring = state.ring
    if ring.n < 3:
        raise ValueError("one-robot confiner needs n >= 3")
    if state.anchor is None:
        state = replace(state, anchor=positions[0])
    u = state.anchor
    v = ring.neighbor(u, CCW)
    (pos,) = positions
    expected, other = (u, v) if state.phase == 0 else (v, u)
    if pos == other:
        state = state.advanced(1 - state.phase, t)
    elif pos != expected:
        raise ValueError(f"robot left the confinement set: at node {pos}, round {t}")
    if state.phase == 0:
        removed = ring.port_edge(u, CW)
    else:
        removed = ring.port_edge(v, CCW)
    return _all_but(ring, [removed]), state


def _two_robot_phases(ring: RingSpec, u: int):
    v = ring.neighbor(u, CW)
    w = ring.neighbor(v, CW)
    e_ul, e_ur = ring.port_edge(u, CCW), ring.port_edge(u, CW)
    e_vl = ring.port_edge(v, CCW)
    e_wl, e_wr = ring.port_edge(w, CCW), ring.port_edge(w, CW)
    # (removed edges, expected positions of (r1, r2) during the phase)
    return [
        ((e_ul, e_vl), (u, v)),  # r2 may only go v -> w
        ((e_ul, e_wl, e_wr), (u, w)),  # r1 may only go u -> v
        ((e_wl, e_wr), (v, w)),  # r1 may only go v -> u
        ((e_ul, e_ur, e_wr), (u, w)),  # r2 may only go w -> v
    ]


def two_robot_confiner_step(state: ConfinerState, config, t: int) -> tuple[frozenset[int], ConfinerState]:
    """Keep two robots starting on ``u`` and its CW neighbour ``v`` inside ``{u, v, w}``.

    Cycles through four phases; at every round each robot sees at most one
    present edge, and that edge leads back inside the set.
    """
    positions = tuple(config.positions)
    if len(positions) != 2:
        raise ValueError(f"two-robot confiner needs exactly 2 robots, got {len(positions)}")
    ring = state.ring
    if ring.n < 4:
        raise ValueError("two-robot confiner needs n >= 4")
    if state.anchor is None:
        state = replace(state, anchor=positions[0])
    phases = _two_robot_phases(ring, state.anchor)
    _, expected = phases[state.phase]
    nxt = (state.phase + 1) % 4
    if positions == phases[nxt][1] and positions != expected:
        state = state.advanced(nxt, t)
    elif positions != expected:
        raise ValueError(f"robots left the confinement pattern: at {positions}, round {t}")
    removed, _ = phases[state.phase]
    return _all_but(ring, removed), state


class _Confiner(EdgeSchedule):
    adaptive = True
    _step = None

    def __init__(self, ring: RingSpec, anchor: int | None = None):
        super().__init__(ring)
        if anchor is not None:
            ring.check_node(anchor)
        self.anchor = anchor
        self.reset()

    def reset(self) -> None:
        self.state = ConfinerState(self.ring, self.anchor)
        self.phase_log: list[tuple[int, int]] = [(0, 0)]

    def edges_at(self, t: int, obs=None) -> frozenset[int]:
        if obs is None:
            raise ValueError(f"adaptive schedule {self.kind!r} needs the configuration of round {t}")
        edges, new = type(self)._step(self.state, obs, t)
        if new.advances != self.state.advances:
            self.phase_log.append((new.phase, t))
        self.state = new
        return edges

    def allowed_nodes(self) -> frozenset[int]:
        raise NotImplementedError

    def report(self, horizon: int, stall_window: int = 1000) -> dict:
        """Phase bookkeeping: advances, longest finished phase, age of the open phase."""
        open_age = horizon - self.state.phase_start
        return {
            "phase_advances": self.state.advances,
            "longest_closed_phase": self.state.longest_phase,
            "open_phase_age": open_age,
            "stalled": open_age >= stall_window,
        }

    def describe(self) -> dict:
        return {"kind": self.kind, "anchor": self.anchor}


class OneRobotConfiner(_Confiner):
    kind = "one_robot_confiner"
    _step = staticmethod(one_robot_confiner_step)

    def allowed_nodes(self) -> frozenset[int]:
        u = self.state.anchor
        return frozenset({u, self.ring.neighbor(u, CCW)})


class TwoRobotConfiner(_Confiner):
    kind = "two_robot_confiner"
    _step = staticmethod(two_robot_confiner_step)

    def allowed_nodes(self) -> frozenset[int]:
        u = self.state.anchor
        v = self.ring.neighbor(u, CW)
        return frozenset({u, v, self.ring.neighbor(v, CW)})
