"""Incremental trace aggregates: tower records and node coverage.

Both accumulators consume configurations in order, chunk by chunk, so a run
longer than the detail cap still gets exact tower and coverage figures.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np



@dataclass(frozen=True)
class TowerRecord:
    """Robots ``members`` co-located on ``node`` for configurations ``start_round..end_round``."""

    node: int
    members: tuple[int, ...]
    start_round: int
    end_round: int

    @property
    def size(self) -> int:
        return len(self.members)


def colocated_rows(positions: np.ndarray) -> np.ndarray:
    """Boolean mask of configurations holding at least one tower."""
    if positions.shape[1] < 2:
        return np.zeros(len(positions), dtype=bool)
    s = np.sort(positions, axis=1)
    return (np.diff(s, axis=1) == 0).any(axis=1)


def groups_of(row) -> dict[int, tuple[int, ...]]:
    """Towers of one configuration: node -> member indices."""
    where: dict[int, list[int]] = {}
    for i, p in enumerate(row):
        where.setdefault(int(p), []).append(i)
    return {node: tuple(m) for node, m in where.items() if len(m) > 1}


_NODE_BITS = 32
_NODE_MASK = (1 << _NODE_BITS) - 1


@lru_cache(maxsize=None)
def _members(mask: int, k: int) -> tuple[int, ...]:
    return tuple(j for j in range(k) if mask >> j & 1)


class TowerTracker:
    """Builds maximal tower records from consecutive configurations.

    A record lasts while the same member set stays on the same node; when a
    robot joins or leaves, the record closes and a new one opens.
    """

    def __init__(self) -> None:
        self.records: list[TowerRecord] = []
        self._open: dict[tuple[int, tuple[int, ...]], int] = {}  # alive at the last fed row -> start

    def feed(self, start: int, positions: np.ndarray) -> None:
        """Consume configurations ``start .. start + len(positions) - 1``."""
        rows, k = positions.shape
        carried, self._open = self._open, {}
        if k >= 2 and rows:
            bits = np.int64(1) << np.arange(k, dtype=np.int64)
            eq = positions[:, :, None] == positions[:, None, :]
            masks = (eq * bits).sum(axis=2)
            leader = (masks & -masks) == bits
            key = np.where(leader & (eq.sum(axis=2) > 1), (masks << _NODE_BITS) | positions, -1)
            for i in range(k):
                col = key[:, i]
                live = col >= 0
                if not live.any():
                    continue
                prev = np.concatenate(([-1], col[:-1]))
                nxt = np.concatenate((col[1:], [-1]))
                starts = np.flatnonzero(live & (col != prev)).tolist()
                ends = np.flatnonzero(live & (col != nxt)).tolist()
                keys = col[starts].tolist()
                for s, e, kk in zip(starts, ends, keys):
                    node = kk & _NODE_MASK
                    members = _members(kk >> _NODE_BITS, k)
                    first = start + s
                    if s == 0 and (node, members) in carried:
                        first = carried.pop((node, members))
                    if e == rows - 1:
                        self._open[(node, members)] = first
                    else:
                        self.records.append(TowerRecord(node, members, first, start + e))
        for (node, members), first in carried.items():
            self.records.append(TowerRecord(node, members, first, start - 1))

    def finish(self, last_config: int) -> list[TowerRecord]:
        for (node, members), first in self._open.items():
            self.records.append(TowerRecord(node, members, first, last_config))
        self._open = {}
        self.records.sort(key=lambda r: (r.start_round, r.node))
        return self.records


@dataclass(frozen=True)
class CoverageStats:
    n: int
    rounds: int
    visit_count: tuple[int, ...]
    last_visit: tuple[int, ...]
    max_gap: tuple[int, ...]
    epochs_completed: int
    first_full_coverage_round: int | None

    @property
    def visited(self) -> frozenset[int]:
        return frozenset(u for u, c in enumerate(self.visit_count) if c > 0)

    @property
    def worst_gap(self) -> int:
        return max(self.max_gap)

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "epochs_completed": self.epochs_completed,
            "first_full_coverage_round": self.first_full_coverage_round,
            "worst_gap": self.worst_gap,
            "visited": sorted(self.visited),
            "visit_count": list(self.visit_count),
            "max_gap": list(self.max_gap),
        }


_INF = np.iinfo(np.int64).max


class CoverageAccumulator:
    """Per-node visit statistics and coverage epochs.

    A node is visited in configuration ``c`` if some robot occupies it; an
    epoch completes at the first configuration by which every node has been
    visited since the previous completion.  Gaps count rounds between
    consecutive visits, with virtual visits at configuration 0 and at the
    final configuration, so an unvisited node has gap = horizon.
    """

    def __init__(self, n: int):
        self.n = n
        self.configs = 0
        self.visits = np.zeros(n, dtype=np.int64)
        self.last_visit = np.full(n, -1, dtype=np.int64)
        self._anchor = np.zeros(n, dtype=np.int64)
        self.max_gap = np.zeros(n, dtype=np.int64)
        self.epochs = 0
        self.first_full: int | None = None
        self._pending = np.ones(n, dtype=bool)  # nodes still missing from the open epoch

    def feed(self, positions: np.ndarray) -> None:
        rows = len(positions)
        if rows == 0:
            return
        base = self.configs
        occ = np.zeros((rows, self.n), dtype=bool)
        occ[np.arange(rows)[:, None], positions] = True
        self.visits += occ.sum(axis=0)

        idx = np.arange(rows, dtype=np.int64)[:, None]
        stamped = np.where(occ, idx, _INF)
        nxt = np.minimum.accumulate(stamped[::-1], axis=0)[::-1]
        for u in range(self.n):
            hits = np.flatnonzero(occ[:, u])
            if hits.size == 0:
                continue
            times = hits + base
            gaps = np.diff(times)
            first_gap = times[0] - self._anchor[u]
            self.max_gap[u] = max(self.max_gap[u], first_gap, int(gaps.max()) if gaps.size else 0)
            self._anchor[u] = self.last_visit[u] = times[-1]

        completion = nxt.max(axis=1).tolist()  # epoch end when starting fresh at a row
        pending = self._pending
        fresh = bool(pending.all())
        s = 0
        while s < rows:
            done = completion[s] if fresh else int(nxt[s, pending].max())
            if done == _INF:
                pending = pending & ~occ[s:].any(axis=0)
                break
            self.epochs += 1
            if self.first_full is None:
                self.first_full = max(base + done - 1, 0)
            fresh = True
            pending = np.ones(self.n, dtype=bool)
            s = done + 1
        self._pending = pending
        self.configs += rows

    def stats(self) -> CoverageStats:
        final = self.configs - 1
        tail = final - self._anchor
        gaps = np.maximum(self.max_gap, tail)
        return CoverageStats(
            n=self.n,
            rounds=max(final, 0),
            visit_count=tuple(int(x) for x in self.visits),
            last_visit=tuple(int(x) for x in self.last_visit),
            max_gap=tuple(int(x) for x in gaps),
            epochs_completed=self.epochs,
            first_full_coverage_round=self.first_full,
        )
