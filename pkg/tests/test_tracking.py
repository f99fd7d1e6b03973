from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from dynaring.tracking import CoverageAccumulator, TowerRecord, TowerTracker, colocated_rows, groups_of


def naive_towers(positions):
    """Records by scanning configurations one at a time."""
    open_, done = {}, []
    for c, row in enumerate(positions):
        now = {(node, members) for node, members in groups_of(row).items()}
        for key in list(open_):
            if key not in now:
                done.append(TowerRecord(key[0], key[1], open_.pop(key), c - 1))
        for key in now:
            open_.setdefault(key, c)
    last = len(positions) - 1
    done += [TowerRecord(n, m, s, last) for (n, m), s in open_.items()]
    return sorted(done, key=lambda r: (r.start_round, r.node))


def naive_coverage(n, positions):
    """Visit statistics straight from the definitions."""
    final = len(positions) - 1
    visits = [[c for c, row in enumerate(positions) if u in row] for u in range(n)]
    gaps = []
    for times in visits:
        marks = [0] + times + [final]
        gaps.append(max(b - a for a, b in zip(marks, marks[1:])))
    seen, epochs, first = set(), 0, None
    for c, row in enumerate(positions):
        seen |= set(row)
        if len(seen) == n:
            epochs += 1
            first = max(c - 1, 0) if first is None else first
            seen = set()
    return [len(v) for v in visits], gaps, epochs, first


walks = st.integers(2, 7).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.integers(1, 4).flatmap(
            lambda k: st.lists(st.lists(st.integers(0, n - 1), min_size=k, max_size=k), min_size=1, max_size=60)
        ),
    )
)


@settings(max_examples=150, deadline=None)
@given(walks, st.integers(1, 13))
def test_tower_tracker_matches_scan(walk, chunk):
    n, rows = walk
    positions = np.array(rows)
    tracker = TowerTracker()
    for s in range(0, len(positions), chunk):
        tracker.feed(s, positions[s:s + chunk])
    assert tracker.finish(len(positions) - 1) == naive_towers(rows)


@settings(max_examples=150, deadline=None)
@given(walks, st.integers(1, 13))
def test_coverage_matches_definition(walk, chunk):
    n, rows = walk
    positions = np.array(rows)
    acc = CoverageAccumulator(n)
    for s in range(0, len(positions), chunk):
        acc.feed(positions[s:s + chunk])
    stats = acc.stats()
    visits, gaps, epochs, first = naive_coverage(n, rows)
    assert list(stats.visit_count) == visits
    assert list(stats.max_gap) == gaps
    assert stats.epochs_completed == epochs
    assert stats.first_full_coverage_round == first


@settings(max_examples=60, deadline=None)
@given(walks)
def test_epochs_monotone_in_horizon(walk):
    n, rows = walk
    counts = []
    for h in range(1, len(rows) + 1):
        acc = CoverageAccumulator(n)
        acc.feed(np.array(rows[:h]))
        counts.append(acc.stats().epochs_completed)
    assert counts == sorted(counts)


def test_tower_split_when_robot_joins():
    rows = [[0, 0, 2], [0, 0, 0], [0, 0, 1]]
    recs = TowerTracker()
    recs.feed(0, np.array(rows))
    got = recs.finish(2)
    assert [(r.members, r.start_round, r.end_round) for r in got] == [
        ((0, 1), 0, 0),
        ((0, 1, 2), 1, 1),
        ((0, 1), 2, 2),
    ]


def test_colocated_rows():
    assert colocated_rows(np.array([[0, 1], [1, 1], [2, 0]])).tolist() == [False, True, False]
    assert not colocated_rows(np.array([[3], [3]])).any()
