"""Robot state machines.

Each algorithm is a pure Compute function ``(RobotState, View) -> RobotState``.
Nothing in a state or a view identifies a robot, its position, the ring size
or the team size: robots are uniform and anonymous.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .ring import CCW, CW, GlobalDirection


class LocalDirection(enum.Enum):
    LEFT = "l"
    RIGHT = "r"

    @property
    def opposite(self) -> LocalDirection:
        return LocalDirection.RIGHT if self is LocalDirection.LEFT else LocalDirection.LEFT


LEFT = LocalDirection.LEFT
RIGHT = LocalDirection.RIGHT


class Algorithm(enum.Enum):
    PEF3PLUS = "pef3plus"
    PEF2 = "pef2"
    PEF1 = "pef1"

    @classmethod
    def parse(cls, value: str | Algorithm) -> Algorithm:
        if isinstance(value, Algorithm):
            return value
        key = value.strip().lower().replace("_", "").replace("+", "plus")
        for alg in cls:
            if alg.value == key:
                return alg
        raise ValueError(f"unknown algorithm {value!r} (expected pef3plus, pef2 or pef1)")

    @property
    def code(self) -> int:
        return _ALGORITHM_CODES[self]


_ALGORITHM_CODES = {Algorithm.PEF3PLUS: 0, Algorithm.PEF2: 1, Algorithm.PEF1: 2}


@dataclass(frozen=True)
class Chirality:
    """Private, stable mapping of a robot's local labels onto the ring."""

    right_is_cw: bool = True


@dataclass(frozen=True)
class View:
    """Look-phase snapshot.

    Edge presence is captured for both ports so that Compute can evaluate
    ``ExistsEdge(dir)`` after flipping ``dir``.  Co-location is a boolean only.
    """

    exists_edge_dir: bool
    exists_edge_opp: bool
    others_on_node: bool


@dataclass(frozen=True)
class RobotState:
    dir: LocalDirection = LEFT
    has_moved_previous_step: bool = False
    chirality: Chirality = Chirality()
    algorithm: Algorithm = Algorithm.PEF3PLUS

    @property
    def heading(self) -> GlobalDirection:
        return local_to_global(self.dir, self.chirality)


def local_to_global(d: LocalDirection, c: Chirality) -> GlobalDirection:
    if d is RIGHT:
        return CW if c.right_is_cw else CCW
    return CCW if c.right_is_cw else CW


def compute_pef3plus(s: RobotState, v: View) -> RobotState:
    flipped = s.has_moved_previous_step and v.others_on_node
    new_dir = s.dir.opposite if flipped else s.dir
    exists = v.exists_edge_opp if flipped else v.exists_edge_dir
    return replace(s, dir=new_dir, has_moved_previous_step=exists)


def compute_pef2(s: RobotState, v: View) -> RobotState:
    if not v.others_on_node and v.exists_edge_dir != v.exists_edge_opp:
        if v.exists_edge_opp:
            return replace(s, dir=s.dir.opposite)
    return s


def compute_pef1(s: RobotState, v: View) -> RobotState:
    # "arbitrarily" resolved as: keep the current direction when it is usable
    if not v.exists_edge_dir and v.exists_edge_opp:
        return replace(s, dir=s.dir.opposite)
    return s


_COMPUTE = {
    Algorithm.PEF3PLUS: compute_pef3plus,
    Algorithm.PEF2: compute_pef2,
    Algorithm.PEF1: compute_pef1,
}


def compute(s: RobotState, v: View) -> RobotState:
    """Dispatch to the Compute function of ``s.algorithm``."""
    return _COMPUTE[s.algorithm](s, v)
