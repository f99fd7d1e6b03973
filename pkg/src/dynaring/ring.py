"""Static ring topology: node/edge indexing, ports and distances.

Conventions: clockwise (CW) is increasing node index mod ``n`` and edge ``i``
joins node ``i`` to node ``(i + 1) % n``.  A 2-node ring is either a single
edge (simple) or two parallel edges (multigraph).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class GlobalDirection(enum.Enum):
    CW = "CW"
    CCW = "CCW"

    @property
    def opposite(self) -> GlobalDirection:
        return GlobalDirection.CCW if self is GlobalDirection.CW else GlobalDirection.CW


CW = GlobalDirection.CW
CCW = GlobalDirection.CCW


@dataclass(frozen=True)
class RingSpec:
    n: int
    size2_multigraph: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"a ring needs at least 2 nodes, got n={self.n!r}")

    @property
    def edge_count(self) -> int:
        if self.n == 2 and not self.size2_multigraph:
            return 1
        return self.n

    @property
    def nodes(self) -> range:
        return range(self.n)

    @property
    def edges(self) -> range:
        return range(self.edge_count)

    def check_node(self, u: int) -> int:
        if not 0 <= u < self.n:
            raise ValueError(f"node {u} out of range for n={self.n}")
        return u

    def check_edge(self, e: int) -> int:
        if not 0 <= e < self.edge_count:
            raise ValueError(f"edge {e} out of range ({self.edge_count} edges)")
        return e

    def neighbor(self, u: int, g: GlobalDirection) -> int:
        self.check_node(u)
        return (u + 1) % self.n if g is CW else (u - 1) % self.n

    def adjacent_edges(self, u: int) -> tuple[int, int]:
        """Return ``(cw_edge, ccw_edge)``, the edges bound to the two ports of ``u``."""
        self.check_node(u)
        if self.edge_count == 1:
            return 0, 0
        return u, (u - 1) % self.n

    def port_edge(self, u: int, g: GlobalDirection) -> int:
        cw, ccw = self.adjacent_edges(u)
        return cw if g is CW else ccw

    def endpoints(self, e: int) -> tuple[int, int]:
        """Nodes joined by ``e``; the edge is the CW port of the first one."""
        self.check_edge(e)
        return e, (e + 1) % self.n

    def distance(self, u: int, v: int) -> int:
        self.check_node(u)
        self.check_node(v)
        return min((v - u) % self.n, (u - v) % self.n)

    def port_tables(self) -> tuple[list[int], list[int]]:
        """CW and CCW port-to-edge tables indexed by node (used by the engine)."""
        cw = [self.adjacent_edges(u)[0] for u in self.nodes]
        ccw = [self.adjacent_edges(u)[1] for u in self.nodes]
        return cw, ccw
