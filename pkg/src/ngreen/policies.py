"""Insertion policies: which buffered packet takes a passing fillable container."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .traffic import BEST_EFFORT, CRAN_DOWN, CRAN_UP, Packet

if TYPE_CHECKING:
    from .ring import RingTopology
    from .scheduler import Assignment, CapacityParams


class ScheduleError(RuntimeError):
    """A deterministic schedule claimed a container it could not get."""

    def __init__(self, detail: str, time: int = -1, node: int = -1):
        super().__init__(detail)
        self.detail = detail
        self.time = time
        self.node = node


@dataclass(frozen=True)
class Fifo:
    name = "fifo"


@dataclass(frozen=True)
class CranPriority:
    name = "cran_priority"


@dataclass(frozen=True)
class DeterministicReservation:
    assignment: "Assignment"
    name = "deterministic"


PolicyKind = Fifo | CranPriority | DeterministicReservation


def fifo_select(buffer: deque, fillable: bool) -> Optional[Packet]:
    """Pop the oldest packet if the container can be filled.

    The buffer must be kept in service order, which holds when packets are
    appended in arrival order with C-RAN ahead of BE inside a tick.
    """
    if fillable and buffer:
        return buffer.popleft()
    return None


def cran_priority_select(cran: deque, be: deque, fillable: bool) -> Optional[Packet]:
    if not fillable:
        return None
    if cran:
        return cran.popleft()
    if be:
        return be.popleft()
    return None


class FifoBuffer:
    __slots__ = ("queue",)

    def __init__(self):
        self.queue: deque = deque()

    def push(self, pkt: Packet) -> None:
        self.queue.append(pkt)

    def select(self, fillable: bool = True) -> Optional[Packet]:
        return fifo_select(self.queue, fillable)

    def __len__(self):
        return len(self.queue)


class PriorityBuffer:
    __slots__ = ("cran", "be")

    def __init__(self):
        self.cran: deque = deque()
        self.be: deque = deque()

    def push(self, pkt: Packet) -> None:
        (self.be if pkt.cls == BEST_EFFORT else self.cran).append(pkt)

    def select(self, fillable: bool = True) -> Optional[Packet]:
        return cran_priority_select(self.cran, self.be, fillable)

    def __len__(self):
        return len(self.cran) + len(self.be)


class ReservationBuffer:
    """Per-stream C-RAN queues plus a FIFO for best effort."""

    __slots__ = ("streams", "be")

    def __init__(self):
        self.streams: dict = defaultdict(deque)
        self.be: deque = deque()

    def push(self, pkt: Packet) -> None:
        if pkt.cls == BEST_EFFORT:
            self.be.append(pkt)
        else:
            self.streams[(pkt.cls, pkt.source_id)].append(pkt)

    def select(self, fillable: bool = True) -> Optional[Packet]:
        return fifo_select(self.be, fillable)

    def __len__(self):
        return len(self.be)


def make_buffer(policy):
    if isinstance(policy, Fifo):
        return FifoBuffer()
    if isinstance(policy, CranPriority):
        return PriorityBuffer()
    return ReservationBuffer()


@dataclass
class ReservationPlan:
    """Per-phase reserve and fill actions derived from an assignment.

    ``reserve_at[ph]`` and ``fill_at[ph]`` list ``(node, (class, rrh_id))``
    for every stream acting at ``t % P == ph``.
    """

    period: int
    reserve_at: list = field(default_factory=list)
    fill_at: list = field(default_factory=list)
    bound: int = 0

    @classmethod
    def build(cls, assignment: "Assignment", topology: "RingTopology",
              params: "CapacityParams") -> "ReservationPlan":
        P, RS, F = params.period, params.ring_size, params.acceleration
        plan = cls(P, [[] for _ in range(P)], [[] for _ in range(P)], assignment.max_delay)
        v = topology.bbu_node
        for rid, segs in sorted(assignment.segments.items()):
            u = topology.rrh_nodes[rid]
            back = topology.transit(u) + 1
            for seg in segs:
                for j in range(seg.count):
                    t_up = seg.start + j * F
                    for node, key, t_fill in ((u, (CRAN_UP, rid), t_up),
                                              (v, (CRAN_DOWN, rid), t_up + back)):
                        plan.fill_at[t_fill % P].append((node, key))
                        plan.reserve_at[(t_fill - RS) % P].append((node, key))
        return plan

    def active_phases(self) -> list[bool]:
        return [bool(r or f) for r, f in zip(self.reserve_at, self.fill_at)]


def reservation_drive(plan: ReservationPlan, node: int, t: int) -> tuple[list, list]:
    """Streams of ``node`` that reserve and that fill at time t."""
    ph = t % plan.period
    reserve = [key for n, key in plan.reserve_at[ph] if n == node]
    fill = [key for n, key in plan.fill_at[ph] if n == node]
    return reserve, fill
