"""Adaptive adversaries that trap under-provisioned teams.

One robot is kept on two adjacent nodes; two robots are kept on three.  The
adversary removes just enough edges each round that whatever the robots do,
they never leave the trap, while every edge still comes back as long as
the robots keep moving.
"""
from __future__ import annotations

import warnings

from dynaring import Algorithm, Chirality, OneRobotConfiner, RingSpec, TwoRobotConfiner, coverage, diagnose, init, run

warnings.simplefilter("ignore")
HORIZON = 20_000

print(f"{'demo':34s} {'visited':>10s} {'advances':>9s} {'stalled':>8s} {'longest_absence':>16s}")
for alg in Algorithm:
    ring = RingSpec(5)
    adversary = OneRobotConfiner(ring, anchor=0)
    trace = run(ring, adversary, init(ring, 1, [0], [Chirality(True)], alg), HORIZON)
    rep = trace.schedule_report
    visited = ",".join(map(str, sorted(coverage(trace).visited)))
    print(f"{'one robot, ' + alg.value:34s} {visited:>10s} {rep['phase_advances']:9d} {str(rep['stalled']):>8s} "
          f"{max(diagnose(trace, 1000).longest_absence):16d}")

for alg in Algorithm:
    ring = RingSpec(8)
    adversary = TwoRobotConfiner(ring, anchor=0)
    robots = init(ring, 2, [0, 1], [Chirality(True), Chirality(False)], alg)
    trace = run(ring, adversary, robots, HORIZON)
    rep = trace.schedule_report
    visited = ",".join(map(str, sorted(coverage(trace).visited)))
    print(f"{'two robots, ' + alg.value:34s} {visited:>10s} {rep['phase_advances']:9d} {str(rep['stalled']):>8s} "
          f"{max(diagnose(trace, 1000).longest_absence):16d}")
