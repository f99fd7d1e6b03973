"""Once an edge is gone forever, two robots park on its ends and point at it.

The third robot shuttles between them.  We watch the two extremities of the
missing edge and report when the sentinels settle.
"""
from __future__ import annotations

from dynaring import BoundedRecurrence, Chirality, EventualMissing, RingSpec, check_sentinels, init, run

ring = RingSpec(7)
missing, t_remove = 3, 50
robots = init(ring, 3, [0, 2, 5], [Chirality(True), Chirality(True), Chirality(False)])
trace = run(ring, EventualMissing(BoundedRecurrence(ring, 6, seed=4), missing, t_remove), robots, 5_000)

report = check_sentinels(trace, missing, t_remove, tail=1_000)
print(report.line())
print(report.detail)

a, b = ring.endpoints(missing)
last = trace.horizon
print(f"final configuration: positions={trace.positions[last].tolist()} (edge {missing} joins {a} and {b})")
for line in trace.text().splitlines()[t_remove:t_remove + 8]:
    print(line)
