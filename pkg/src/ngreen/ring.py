"""Slotted unidirectional ring: topology, container states and the clocked ring.

The ring holds exactly ``RS`` containers, one per unit of time (UoT) of
circumference.  A container that passes node 0 at time ``t`` reaches node
``u`` at ``t + distance(0, u)``, so node ``u`` sees container
``(t - offset[u]) mod RS`` at time ``t``.

Container bookkeeping is lazy: emission release and reservation expiry are
fully determined by the stored timestamps, so they are applied when the
container is next touched rather than by sweeping every node each tick.
Observable behaviour (``state``, ``fill``, ``reserve``) is identical to an
eager sweep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

FREE = -1


class Status(enum.Enum):
    FREE = "free"
    RESERVED = "reserved"
    FILLED = "filled"


@dataclass(frozen=True)
class RingTopology:
    """Oriented cycle of nodes with integer arc weights.

    ``arc_weights[i]`` is the weight of arc ``(i, i+1 mod n)``.  RRH ``i`` is
    attached to node ``rrh_nodes[i]``; all BBUs sit on ``bbu_node``.
    """

    arc_weights: tuple[int, ...]
    rrh_nodes: tuple[int, ...] = ()
    bbu_node: int = 0
    offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arcs = tuple(int(w) for w in self.arc_weights)
        if not arcs:
            raise ValueError("ring needs at least one node")
        if any(w < 1 for w in arcs):
            raise ValueError("arc weights must be positive integers")
        n = len(arcs)
        if not 0 <= self.bbu_node < n:
            raise ValueError(f"bbu_node {self.bbu_node} outside ring of {n} nodes")
        for u in self.rrh_nodes:
            if not 0 <= u < n:
                raise ValueError(f"RRH attached to unknown node {u}")
        object.__setattr__(self, "arc_weights", arcs)
        object.__setattr__(self, "rrh_nodes", tuple(int(u) for u in self.rrh_nodes))
        acc = [0]
        for w in arcs[:-1]:
            acc.append(acc[-1] + w)
        object.__setattr__(self, "offsets", tuple(acc))

    @classmethod
    def equidistant(cls, node_count: int, ring_size: int, rrh_nodes: Sequence[int] = (),
                    bbu_node: int = 0) -> "RingTopology":
        if ring_size % node_count:
            raise ValueError(f"ring size {ring_size} not divisible by {node_count} nodes")
        return cls((ring_size // node_count,) * node_count, tuple(rrh_nodes), bbu_node)

    @property
    def node_count(self) -> int:
        return len(self.arc_weights)

    @property
    def ring_size(self) -> int:
        return sum(self.arc_weights)

    @property
    def k(self) -> int:
        return len(self.rrh_nodes)

    def distance(self, u: int, v: int) -> int:
        """Directed path length from u to v in [0, RS); 0 when u == v."""
        return (self.offsets[v] - self.offsets[u]) % self.ring_size

    def omega(self, u: int, v: int) -> int:
        """Directed path length from u to v; a full turn (RS) when u == v."""
        d = self.distance(u, v)
        return d if d else self.ring_size

    def transit(self, u: int) -> int:
        """Time for data inserted at u to reach the BBU node."""
        return self.omega(u, self.bbu_node)


@dataclass(frozen=True)
class SimClock:
    t: int
    period: int
    acceleration: int

    def slot(self, t: Optional[int] = None) -> int:
        t = self.t if t is None else t
        return (t % self.period) // self.acceleration

    def position(self, t: Optional[int] = None) -> int:
        t = self.t if t is None else t
        return t % self.acceleration


@dataclass(frozen=True)
class ContainerState:
    index: int
    status: Status
    filler: Optional[int] = None
    traffic_class: Optional[int] = None
    fill_time: Optional[int] = None
    reserved_for: Optional[int] = None


class Ring:
    """Mutable ring state driven one UoT at a time.

    Within a tick the caller may ``reserve`` and then ``fill`` at any node;
    ``advance`` moves the clock.  Both return ``False`` when refused.

    A reservation placed by ``u`` at ``t`` is held at ``t + RS`` (the next
    time the container is at ``u``) and is then consumed whether or not
    ``u`` fills it.
    """

    def __init__(self, topology: RingTopology):
        self.topology = topology
        rs = topology.ring_size
        self.rs = rs
        self.t = 0
        self._offsets = topology.offsets
        self.filler = [FREE] * rs
        self.fclass = [0] * rs
        self.ftime = [0] * rs
        self.reserver = [FREE] * rs
        self.rtime = [0] * rs
        self.holder = [FREE] * rs
        self.htime = [0] * rs
        # start of the current free-and-reserved stretch, -1 if none
        self._fr_start = [-1] * rs
        self.blocked = [0] * rs
        self.window = (0, 1 << 62)
        self.fills = [0, 0, 0]
        self.reservations = 0
        self.used_reservations = 0
        self.unused_reservations = 0

    # -- geometry ---------------------------------------------------------
    def container_at(self, node: int, t: Optional[int] = None) -> int:
        t = self.t if t is None else t
        return (t - self._offsets[node]) % self.rs

    def set_window(self, start: int, stop: int) -> None:
        """Only count blocked container-time and fills inside [start, stop)."""
        self.window = (start, stop)

    def _close(self, c: int, end: int) -> None:
        s = self._fr_start[c]
        if s >= 0:
            w0, w1 = self.window
            a, b = max(s, w0), min(end, w1)
            if b > a:
                self.blocked[c] += b - a
            self._fr_start[c] = -1

    def _count_unused(self, due: int) -> None:
        if self.window[0] <= due < self.window[1]:
            self.unused_reservations += 1

    def _normalize(self, c: int, t: int) -> None:
        rs = self.rs
        if self.filler[c] != FREE and t >= self.ftime[c] + rs:
            self.filler[c] = FREE
            if self.reserver[c] != FREE:
                self._fr_start[c] = self.ftime[c] + rs
        if self.holder[c] != FREE and self.htime[c] < t:
            self.holder[c] = FREE
            self._count_unused(self.htime[c])
            if self.reserver[c] == FREE:
                self._close(c, self.htime[c] + 1)
        if self.reserver[c] != FREE:
            due = self.rtime[c] + rs
            if due == t:
                self.holder[c] = self.reserver[c]
                self.htime[c] = t
                self.reserver[c] = FREE
            elif due < t:
                self.reserver[c] = FREE
                self._count_unused(due)
                self._close(c, due)

    # -- operations -------------------------------------------------------
    def fillable(self, node: int) -> bool:
        c = (self.t - self._offsets[node]) % self.rs
        self._normalize(c, self.t)
        r = self.reserver[c]
        return self.filler[c] == FREE and (r == FREE or r == node)

    def fill(self, node: int, traffic_class: int) -> bool:
        t = self.t
        c = (t - self._offsets[node]) % self.rs
        self._normalize(c, t)
        r = self.reserver[c]
        if self.filler[c] != FREE or (r != FREE and r != node):
            return False
        self.filler[c] = node
        self.fclass[c] = traffic_class
        self.ftime[c] = t
        if self.holder[c] == node:
            self.holder[c] = FREE
            self.used_reservations += 1
        self._close(c, t)
        w0, w1 = self.window
        if w0 <= t < w1:
            self.fills[traffic_class] += 1
        return True

    def reserve(self, node: int) -> bool:
        t = self.t
        c = (t - self._offsets[node]) % self.rs
        self._normalize(c, t)
        if self.reserver[c] != FREE:
            return False
        self.reserver[c] = node
        self.rtime[c] = t
        self.reservations += 1
        if self.filler[c] == FREE and self._fr_start[c] < 0:
            self._fr_start[c] = t
        return True

    def advance(self, steps: int = 1) -> None:
        self.t += steps

    # -- inspection -------------------------------------------------------
    def state(self, index: int) -> ContainerState:
        self._normalize(index, self.t)
        filler = self.filler[index]
        r = self.reserver[index]
        if r == FREE and self.holder[index] != FREE and self.htime[index] == self.t:
            r = self.holder[index]
        reserved = None if r == FREE else r
        if filler != FREE:
            return ContainerState(index, Status.FILLED, filler, self.fclass[index],
                                  self.ftime[index], reserved)
        if reserved is not None:
            return ContainerState(index, Status.RESERVED, reserved_for=reserved)
        return ContainerState(index, Status.FREE)

    def state_at(self, node: int) -> ContainerState:
        return self.state(self.container_at(node))

    def close(self, t: Optional[int] = None) -> None:
        """Flush open free-and-reserved stretches up to time t."""
        t = self.t if t is None else t
        for c in range(self.rs):
            self._normalize(c, t)
            self._close(c, t)

    def snapshot(self) -> tuple:
        return (self.t, tuple(self.filler), tuple(self.fclass), tuple(self.ftime),
                tuple(self.reserver), tuple(self.rtime), tuple(self.holder),
                tuple(self.htime))
