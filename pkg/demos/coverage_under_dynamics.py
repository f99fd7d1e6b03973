"""Three robots running PEF_3+ keep exploring a ring whose edges flicker.

Prints, per schedule family, the coverage epochs and the worst inter-visit
gap; then shows how the gap reacts when one edge disappears for good.
"""
from __future__ import annotations

from dynaring import BoundedRecurrence, Chirality, EventualMissing, RingSpec, Static, coverage, init, run

ring = RingSpec(9)
robots = init(ring, 3, [0, 3, 6], [Chirality(True), Chirality(False), Chirality(True)])

schedules = {
    "static": Static(ring),
    "bounded_recurrence(8)": BoundedRecurrence(ring, 8, seed=1),
    "edge 4 missing from round 100": EventualMissing(BoundedRecurrence(ring, 8, seed=1), 4, 100),
}

print(f"{'schedule':32s} {'epochs':>7s} {'worst_gap':>9s} {'towers':>7s}")
for name, schedule in schedules.items():
    trace = run(ring, schedule, robots, 10_000)
    stats = coverage(trace)
    print(f"{name:32s} {stats.epochs_completed:7d} {stats.worst_gap:9d} {len(trace.towers):7d}")

# gap per node once the edge is gone: nodes next to the hole are still visited
trace = run(ring, schedules["edge 4 missing from round 100"], robots, 10_000)
print("per-node max gap:", " ".join(f"{g:3d}" for g in coverage(trace).max_gap))
