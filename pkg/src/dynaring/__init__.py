"""Perpetual exploration of highly dynamic rings by fully synchronous robots.

Rings and edge schedules (:mod:`dynaring.ring`, :mod:`dynaring.dynamics`),
robot algorithms (:mod:`dynaring.robots`), the round loop
(:mod:`dynaring.engine`) and trace checkers (:mod:`dynaring.analysis`).
"""
from __future__ import annotations

from .analysis import (
    InvariantReport,
    check_confinement,
    check_max_tower,
    check_sentinels,
    check_tower_opposite_dirs,
    coverage,
)
from .dynamics import (
    Bernoulli,
    BoundedRecurrence,
    EdgeSchedule,
    EventualMissing,
    OneRobotConfiner,
    Periodic,
    RemovalMask,
    Scripted,
    Static,
    TwoRobotConfiner,
    apply_removal,
    diagnose,
    one_edge,
)
from .engine import Configuration, ExecutionTrace, init, run, step
from .ring import CCW, CW, GlobalDirection, RingSpec
from .robots import LEFT, RIGHT, Algorithm, Chirality, LocalDirection, RobotState, View

__all__ = [
    "Algorithm",
    "Bernoulli",
    "BoundedRecurrence",
    "CCW",
    "CW",
    "Chirality",
    "Configuration",
    "EdgeSchedule",
    "EventualMissing",
    "ExecutionTrace",
    "GlobalDirection",
    "InvariantReport",
    "LEFT",
    "LocalDirection",
    "OneRobotConfiner",
    "Periodic",
    "RIGHT",
    "RemovalMask",
    "RingSpec",
    "RobotState",
    "Scripted",
    "Static",
    "TwoRobotConfiner",
    "View",
    "apply_removal",
    "check_confinement",
    "check_max_tower",
    "check_sentinels",
    "check_tower_opposite_dirs",
    "coverage",
    "diagnose",
    "init",
    "one_edge",
    "run",
    "step",
]
