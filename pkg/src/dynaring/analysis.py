"""Invariant checkers and coverage metrics over execution traces.

Checkers are pure functions of a trace.  They read positions and states only,
never the algorithm, so hand-built traces can be used to test their
sensitivity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .engine import ExecutionTrace
from .ring import CCW, CW
from .tracking import CoverageAccumulator, CoverageStats

Verdict = Literal["pass", "fail", "inconclusive"]

__all__ = [
    "CoverageStats",
    "InvariantReport",
    "check_confinement",
    "check_constant_headings",
    "check_has_moved_consistency",
    "check_max_tower",
    "check_sentinels",
    "check_tower_opposite_dirs",
    "coverage",
]


@dataclass(frozen=True)
class InvariantReport:
    name: str
    verdict: Verdict
    first_violation: int | None = None
    witness: dict | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        seed = "-"
        if self.witness is not None and self.witness.get("seed") is not None:
            seed = str(self.witness["seed"])
        first = "-" if self.first_violation is None else str(self.first_violation)
        return f"inv={self.name} verdict={self.verdict} first_violation={first} witness_seed={seed}"


def _witness(trace: ExecutionTrace, t: int) -> dict:
    snap = {}
    if t < len(trace.positions):
        snap = {
            "positions": trace.positions[t].tolist(),
            "dirs": ["r" if d else "l" for d in trace.dirs[t]],
        }
    return {"seed": trace.meta.get("seed"), "params": dict(trace.meta), "round": t, "snapshot": snap}


def _fail(name: str, trace: ExecutionTrace, t: int, detail: str) -> InvariantReport:
    return InvariantReport(name, "fail", t, _witness(trace, t), detail)


def coverage(trace: ExecutionTrace) -> CoverageStats:
    if trace.truncated:
        return trace.coverage_acc.stats()
    acc = CoverageAccumulator(trace.ring.n)
    acc.feed(trace.positions)
    return acc.stats()


def check_max_tower(trace: ExecutionTrace) -> InvariantReport:
    """No tower ever holds 3 robots or more."""
    big = [r for r in trace.towers if r.size > 2]
    if not big:
        return InvariantReport("max_tower", "pass", detail=f"{len(trace.towers)} towers")
    worst = min(big, key=lambda r: r.start_round)
    return _fail(
        "max_tower", trace, worst.start_round,
        f"{worst.size} robots {worst.members} on node {worst.node}",
    )


def check_tower_opposite_dirs(trace: ExecutionTrace) -> InvariantReport:
    """Members of a 2-robot tower head in opposite global directions after each Compute inside the tower."""
    trace.require_detail()
    heads = trace.headings_cw()
    first = None
    for rec in trace.towers:
        if rec.size != 2:
            continue
        a, b = rec.members
        # post-Compute state of round t is stored in row t + 1
        lo, hi = rec.start_round + 1, min(rec.end_round, trace.horizon - 1) + 1
        if lo > hi:
            continue
        same = np.flatnonzero(heads[lo:hi + 1, a] == heads[lo:hi + 1, b])
        if same.size:
            t = rec.start_round + int(same[0])
            if first is None or t < first[0]:
                first = (t, rec)
    if first is None:
        return InvariantReport("opposite_dirs", "pass")
    t, rec = first
    return _fail("opposite_dirs", trace, t, f"tower {rec.members} on node {rec.node} share a heading")


def check_confinement(trace: ExecutionTrace, allowed: Iterable[int]) -> InvariantReport:
    allowed = frozenset(allowed)
    visited = coverage(trace).visited
    outside = visited - allowed
    if not outside:
        return InvariantReport("confinement", "pass", detail=f"visited={sorted(visited)}")
    t = None
    if not trace.truncated:
        bad = ~np.isin(trace.positions, sorted(allowed)).all(axis=1)
        t = int(np.flatnonzero(bad)[0])
    rep = _fail("confinement", trace, t if t is not None else -1, f"visited {sorted(outside)} outside {sorted(allowed)}")
    return rep if t is not None else InvariantReport("confinement", "fail", None, _witness(trace, 0), rep.detail)


def _pointing_at(trace: ExecutionTrace, node: int, edge: int) -> np.ndarray:
    """Per configuration: some robot on ``node`` points (by its port) to ``edge``."""
    ring = trace.ring
    cw_edge, ccw_edge = ring.adjacent_edges(node)
    heads = trace.headings_cw()
    at = trace.positions == node
    toward = np.zeros_like(at)
    if cw_edge == edge:
        toward |= heads
    if ccw_edge == edge:
        toward |= ~heads
    return at & toward


def check_sentinels(
    trace: ExecutionTrace, e: int, t_remove: int, tail: int = 1000
) -> InvariantReport:
    """Eventually one robot sits on each extremity of the missing edge ``e``, pointing to it.

    Pass: from some configuration ``t* <= horizon - tail`` on, both
    extremities host such a robot.  Fail: a settled sentinel (pointing to
    ``e``, not having moved) is later gone from its extremity, which the
    algorithm forbids once ``e`` is missing.  Otherwise inconclusive.
    """
    name = "sentinels"
    trace.require_detail()
    ring = trace.ring
    horizon = trace.horizon
    if t_remove >= horizon:
        return InvariantReport(name, "inconclusive", detail="edge not removed within the horizon")
    if trace.edges[t_remove:, e].any():
        return InvariantReport(name, "inconclusive", detail=f"edge {e} reappears after round {t_remove}")
    a, b = ring.endpoints(e)
    ends = [_pointing_at(trace, a, e), _pointing_at(trace, b, e)]

    settled_from = t_remove + 1
    for node, point in zip((a, b), ends):
        settled = point[settled_from:] & ~trace.has_moved[settled_from:]
        hits = np.flatnonzero(settled.any(axis=1))
        if hits.size:
            c = settled_from + int(hits[0])
            holds = point[c:].any(axis=1)
            broken = np.flatnonzero(~holds)
            if broken.size:
                t = c + int(broken[0])
                return _fail(name, trace, t, f"sentinel on node {node} settled at {c} but gone at {t}")

    both = ends[0].any(axis=1) & ends[1].any(axis=1)
    window = both[t_remove:]
    misses = np.flatnonzero(~window)
    t_star = t_remove if misses.size == 0 else t_remove + int(misses[-1]) + 1
    if t_star <= horizon - tail:
        return InvariantReport(name, "pass", detail=f"sentinels in place from configuration {t_star}")
    return InvariantReport(name, "inconclusive", detail="no stable sentinel pair within the horizon")


def check_has_moved_consistency(trace: ExecutionTrace) -> InvariantReport:
    """For the robots running PEF_3+, HasMovedPreviousStep equals the previous round's move."""
    trace.require_detail()
    from .robots import Algorithm

    cols = [i for i, a in enumerate(trace.algorithms) if a is Algorithm.PEF3PLUS]
    if not cols or trace.horizon == 0:
        return InvariantReport("has_moved", "pass")
    bad = np.flatnonzero((trace.has_moved[1:, cols] != trace.moved[:, cols]).any(axis=1))
    if bad.size:
        return _fail("has_moved", trace, int(bad[0]), "flag disagrees with the recorded move")
    return InvariantReport("has_moved", "pass")


def check_constant_headings(trace: ExecutionTrace) -> InvariantReport:
    """Every robot keeps its global direction for the whole trace."""
    trace.require_detail()
    heads = trace.headings_cw()
    changed = np.flatnonzero((heads[1:] != heads[:-1]).any(axis=1))
    if changed.size:
        return _fail("constant_headings", trace, int(changed[0]), "a robot changed global direction")
    return InvariantReport("constant_headings", "pass")


def headings(trace: ExecutionTrace, t: int) -> list:
    """Global directions of all robots in configuration ``t``."""
    return [CW if h else CCW for h in trace.headings_cw()[t]]
