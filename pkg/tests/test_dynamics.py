from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynaring.dynamics import (
    Bernoulli,
    BoundedRecurrence,
    ConfinerState,
    EventualMissing,
    OneRobotConfiner,
    Periodic,
    RemovalMask,
    Scripted,
    Static,
    TwoRobotConfiner,
    apply_removal,
    diagnose,
    format_scripted,
    load_scripted,
    one_edge,
    one_robot_confiner_step,
    parse_scripted,
    two_robot_confiner_step,
)
from dynaring.engine import Configuration, ExecutionTrace, init, run
from dynaring.ring import CCW, CW, RingSpec
from dynaring.robots import Algorithm, Chirality


def positions_only(*positions) -> Configuration:
    return Configuration(tuple(positions), ())


def rows(schedule, t0, t1):
    return [schedule.edges_at(t) for t in range(t0, t1)]


def test_static_and_eventual_missing():
    ring = RingSpec(4)
    assert Static(ring).edges_at(17) == {0, 1, 2, 3}
    em = EventualMissing(Static(ring), 2, 5)
    assert em.edges_at(4) == {0, 1, 2, 3}
    assert em.edges_at(5) == {0, 1, 3}
    assert em.edges_at(10**9) == {0, 1, 3}


def test_scripted_removal_example():
    ring = RingSpec(3)
    s = Scripted(Static(ring), RemovalMask.of([(0, {3, 4})]))
    assert s.edges_at(3) == {1, 2}
    assert s.edges_at(5) == {0, 1, 2}


def test_empty_mask_is_identity():
    ring = RingSpec(6)
    base = Bernoulli(ring, 0.4, 7)
    assert np.array_equal(apply_removal(base, RemovalMask()).block(0, 300), base.block(0, 300))


def test_removal_window_and_union():
    ring = RingSpec(3)
    s = apply_removal(Static(ring), RemovalMask.of([(0, range(0, 10))]))
    absent = [t for t in range(20) if 0 not in s.edges_at(t)]
    assert absent == list(range(10))
    both = apply_removal(Static(ring), RemovalMask.of([(1, range(2, 6)), (1, range(4, 9))]))
    assert [t for t in range(12) if 1 not in both.edges_at(t)] == list(range(2, 9))


def test_removal_rejects_unknown_edge():
    with pytest.raises(ValueError):
        apply_removal(Static(RingSpec(3)), RemovalMask.of([(3, [0])]))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 9),
    st.integers(0, 2**63),
    st.lists(st.tuples(st.integers(0, 8), st.integers(0, 80), st.integers(0, 20)), max_size=6),
)
def test_removal_never_adds_edges(n, seed, raw):
    ring = RingSpec(n, size2_multigraph=True)
    entries = [(e % ring.edge_count, range(a, a + w)) for e, a, w in raw]
    base = Bernoulli(ring, 0.6, seed)
    out = apply_removal(base, RemovalMask.of(entries))
    b, o = base.block(0, 100), out.block(0, 100)
    assert not (o & ~b).any()
    for e, times in entries:
        for t in times:
            if t < 100:
                assert not o[t, e]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(1, 30), st.integers(0, 2**64 - 1), st.floats(0.0, 1.0))
def test_bounded_recurrence_windows(n, bound, seed, p):
    ring = RingSpec(n, size2_multigraph=True)
    block = BoundedRecurrence(ring, bound, seed, p).block(0, 400)
    # every window of `bound` rounds contains each edge at least once
    cum = np.vstack([np.zeros((1, ring.edge_count), int), np.cumsum(block, axis=0)])
    windows = cum[bound:] - cum[:-bound]
    assert (windows >= 1).all()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**64 - 1), st.integers(1, 300), st.integers(1, 300))
def test_draws_depend_only_on_edge_and_round(n, seed, a, b):
    """Changing the horizon or the block boundaries never changes earlier rounds."""
    ring = RingSpec(n)
    for sched in (Bernoulli(ring, 0.5, seed), BoundedRecurrence(ring, 7, seed)):
        whole = sched.block(0, a + b)
        split = np.vstack([sched.block(0, a), sched.block(a, a + b)])
        assert np.array_equal(whole, split)
        assert sched.edges_at(a) == frozenset(np.flatnonzero(whole[a]).tolist())


def test_seeds_give_different_schedules():
    ring = RingSpec(8)
    assert not np.array_equal(Bernoulli(ring, 0.5, 1).block(0, 64), Bernoulli(ring, 0.5, 2).block(0, 64))


def test_bernoulli_frequency():
    block = Bernoulli(RingSpec(10), 0.3, 11).block(0, 20_000)
    assert abs(block.mean() - 0.3) < 0.01


def test_periodic_table():
    ring = RingSpec(3)
    s = Periodic(ring, ["110", [2]])
    assert rows(s, 0, 4) == [{0, 1}, {2}, {0, 1}, {2}]
    with pytest.raises(ValueError):
        Periodic(ring, ["11"])


def test_scripted_text_round_trip(tmp_path):
    text = "# two absences\nedge 0 absent 3..4\n\nedge 2 absent 10..10  # single round\n"
    mask = parse_scripted(text)
    assert mask.entries == ((0, range(3, 5)), (2, range(10, 11)))
    assert parse_scripted(format_scripted(mask)) == mask
    path = tmp_path / "absences.txt"
    path.write_text(text)
    s = load_scripted(path, RingSpec(3))
    assert s.edges_at(4) == {1, 2} and s.edges_at(10) == {0, 1}


@pytest.mark.parametrize("bad", ["edge 0 absent 4..3", "edge x absent 1..2", "edge 0 present 1..2"])
def test_scripted_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse_scripted(bad)


def trace_of(ring, edges):
    """Trace of a single idle robot over an explicit edge matrix."""
    horizon = len(edges)
    positions = np.zeros((horizon + 1, 1), int)
    return ExecutionTrace.from_arrays(ring, positions, np.zeros((horizon + 1, 1), bool), [True], edges=edges)


def test_one_edge_examples():
    ring = RingSpec(4)
    static = trace_of(ring, np.ones((20, 4), bool))
    assert not one_edge(static, 0, 0, 19)
    edges = np.ones((20, 4), bool)
    edges[5:10, 0] = False
    tr = trace_of(ring, edges)
    assert one_edge(tr, 0, 5, 9)
    assert one_edge(tr, 1, 5, 9)
    assert not one_edge(tr, 2, 5, 9)
    assert not one_edge(tr, 0, 4, 9)
    with pytest.raises(ValueError):
        one_edge(tr, 0, 9, 5)


def test_diagnose_examples():
    ring = RingSpec(4)
    assert diagnose(trace_of(ring, np.ones((50, 4), bool)), 10).eventual_underlying_connected_so_far
    tr = trace_of(ring, EventualMissing(Static(ring), 2, 0).block(0, 200))
    d = diagnose(tr, 100)
    assert d.recurrent == (True, True, False, True)
    assert d.eventual_underlying_connected_so_far
    two = Scripted(Static(ring), RemovalMask.of([(0, range(0, 200)), (2, range(0, 200))]))
    assert not diagnose(trace_of(ring, two.block(0, 200)), 100).eventual_underlying_connected_so_far
    with pytest.raises(ValueError):
        diagnose(tr, 0)


def test_diagnose_absence_lengths():
    ring = RingSpec(3)
    edges = np.ones((30, 3), bool)
    edges[2:7, 1] = False  # closed run of 5
    edges[25:, 2] = False  # open run of 5
    d = diagnose(trace_of(ring, edges), 30)
    assert d.longest_closed_absence == (0, 5, 0)
    assert d.open_absence == (0, 0, 5)
    assert d.absences_bounded_by(6) and not d.absences_bounded_by(5)


def test_one_robot_confiner_examples():
    ring = RingSpec(5)
    state = ConfinerState(ring, 0)
    edges, state = one_robot_confiner_step(state, positions_only(0), 0)
    assert edges == {1, 2, 3, 4}
    # robot observed at v = 4: phase flips, e_vl = edge 3 is removed
    edges, state = one_robot_confiner_step(state, positions_only(4), 1)
    assert edges == {0, 1, 2, 4} and state.phase == 1 and state.advances == 1
    with pytest.raises(ValueError):
        one_robot_confiner_step(state, positions_only(2), 2)
    with pytest.raises(ValueError):
        one_robot_confiner_step(ConfinerState(ring, 0), positions_only(0, 2), 0)
    with pytest.raises(ValueError):
        one_robot_confiner_step(ConfinerState(RingSpec(2), 0), positions_only(0), 0)


def test_two_robot_confiner_phase_sets():
    ring = RingSpec(6)
    state = ConfinerState(ring, 0)
    edges, state = two_robot_confiner_step(state, positions_only(0, 1), 0)
    assert set(ring.edges) - edges == {5, 0}
    edges, state = two_robot_confiner_step(state, positions_only(0, 2), 1)
    assert set(ring.edges) - edges == {5, 1, 2}
    edges, state = two_robot_confiner_step(state, positions_only(1, 2), 2)
    assert set(ring.edges) - edges == {1, 2}
    edges, state = two_robot_confiner_step(state, positions_only(0, 2), 3)
    assert set(ring.edges) - edges == {5, 0, 2}
    edges, state = two_robot_confiner_step(state, positions_only(0, 1), 4)
    assert state.phase == 0 and state.advances == 4
    with pytest.raises(ValueError):
        two_robot_confiner_step(ConfinerState(RingSpec(3), 0), positions_only(0, 1), 0)
    with pytest.raises(ValueError):
        two_robot_confiner_step(ConfinerState(ring, 0), positions_only(0,), 0)


def test_confiner_needs_observation():
    with pytest.raises(ValueError):
        OneRobotConfiner(RingSpec(5)).edges_at(0)


def test_confiner_anchor_defaults_to_first_robot():
    """Confiners read positions only; anchor defaults to the first robot."""
    conf = OneRobotConfiner(RingSpec(5))
    assert conf.edges_at(0, positions_only(3)) == {0, 1, 2, 4}
    assert conf.allowed_nodes() == {3, 2}


def _confined_run(cls, k, alg, chir, n, horizon):
    ring = RingSpec(n)
    positions = [0, 1][:k]
    config = init(ring, k, positions, [Chirality(c) for c in chir], alg)
    sched = cls(ring, 0)
    return ring, sched, run(ring, sched, config, horizon)


@pytest.mark.filterwarnings("ignore")
@pytest.mark.parametrize(
    "cls,k,alg,chir,n",
    [
        (OneRobotConfiner, 1, Algorithm.PEF1, [True], 5),
        (OneRobotConfiner, 1, Algorithm.PEF2, [False], 3),
        (OneRobotConfiner, 1, Algorithm.PEF3PLUS, [True], 9),
        (TwoRobotConfiner, 2, Algorithm.PEF3PLUS, [True, False], 8),
        (TwoRobotConfiner, 2, Algorithm.PEF3PLUS, [True, True], 4),
        (TwoRobotConfiner, 2, Algorithm.PEF2, [True, False], 6),
        (TwoRobotConfiner, 2, Algorithm.PEF1, [False, True], 5),
    ],
)
def test_confiners_leave_one_inward_edge(cls, k, alg, chir, n):
    """Every robot sees at most one present edge, and it leads back inside the set."""
    ring, sched, tr = _confined_run(cls, k, alg, chir, n, 400)
    allowed = sched.allowed_nodes()
    for t in range(tr.horizon):
        for p in tr.positions[t]:
            p = int(p)
            present = [g for g in (CW, CCW) if tr.edges[t, ring.port_edge(p, g)]]
            assert len(present) <= 1
            assert all(ring.neighbor(p, g) in allowed for g in present)
    assert set(np.unique(tr.positions).tolist()) <= allowed


@pytest.mark.filterwarnings("ignore")
def test_advancing_confiner_closes_each_absence():
    ring, sched, tr = _confined_run(OneRobotConfiner, 1, Algorithm.PEF1, [True], 5, 2000)
    rep = sched.report(2000, stall_window=100)
    assert rep["phase_advances"] == 1999 and not rep["stalled"]
    assert diagnose(tr, 100).absences_bounded_by(100)
    stalled = _confined_run(OneRobotConfiner, 1, Algorithm.PEF3PLUS, [True], 5, 2000)[1]
    assert stalled.report(2000, stall_window=100)["stalled"]


@pytest.mark.filterwarnings("ignore")
def test_confiner_reset_replays():
    ring, sched, first = _confined_run(OneRobotConfiner, 1, Algorithm.PEF2, [True], 5, 300)
    config = init(ring, 1, [0], [Chirality(True)], Algorithm.PEF2)
    again = run(ring, sched, config, 300)
    assert np.array_equal(first.edges, again.edges)
