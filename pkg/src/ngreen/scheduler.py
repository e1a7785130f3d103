"""Offset assignment for C-RAN streams on a single-datacenter ring.

Every RRH is described by emission segments: a segment fills one container
every F UoT, ``count`` times, starting at ``start`` (time at the RRH node,
modulo P).  The *position* of a segment is the residue mod F of the time
its containers pass the BBU node.  RRHs use even positions, the matching
BBU replies the next odd one.

The constructions need P, ET and RS to be multiples of F: only then does
a container keep the same position on every turn, which is what makes
distinct positions collision free.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .engine import simulate
from .metrics import waste_and_load_counters
from .policies import DeterministicReservation
from .ring import RingTopology
from .traffic import CRAN_DOWN, CRAN_UP, RrhSpec


class CapacityExceeded(ValueError):
    pass


class Infeasible(ValueError):
    pass


@dataclass(frozen=True)
class CapacityParams:
    period: int
    ring_size: int
    emission_time: int
    acceleration: int
    k: int

    def __post_init__(self):
        P, RS, ET, F = self.period, self.ring_size, self.emission_time, self.acceleration
        if min(P, RS, ET, F) < 1 or self.k < 0:
            raise ValueError("timing parameters must be positive integers")
        if F % 2:
            raise ValueError("acceleration factor must be even (RRH/BBU position pairs)")
        for name, x in (("period", P), ("emission time", ET), ("ring size", RS)):
            if x % F:
                raise ValueError(f"{name} {x} is not a multiple of F={F}")
        if ET > P:
            raise ValueError("emission time exceeds the period")

    @classmethod
    def baseline(cls, k: int = 5) -> "CapacityParams":
        return cls(period=1000, ring_size=100, emission_time=500, acceleration=10, k=k)

    @property
    def packets(self) -> int:
        return self.emission_time // self.acceleration

    @property
    def per_position(self) -> int:
        """Whole RRH blocks that fit on one position."""
        return (self.period - self.ring_size) // self.emission_time


@dataclass(frozen=True)
class Segment:
    start: int
    count: int
    position: int
    delay: int = 0


@dataclass
class Assignment:
    segments: dict[int, list[Segment]] = field(default_factory=dict)
    kind: str = ""

    @property
    def offsets(self) -> dict[int, int]:
        """Time the RRH data first reaches the insertion buffer, per RRH."""
        return {rid: segs[0].start - segs[0].delay for rid, segs in self.segments.items()}

    @property
    def max_delay(self) -> int:
        return max((s.delay for segs in self.segments.values() for s in segs), default=0)

    def rrh_positions(self) -> list[int]:
        return sorted({s.position for segs in self.segments.values() for s in segs})

    def to_json(self) -> str:
        doc = [{"rrh_id": rid,
                "segments": [{"start": s.start, "count": s.count, "position": s.position,
                              "delay": s.delay} for s in segs]}
               for rid, segs in sorted(self.segments.items())]
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, kind: str = "") -> "Assignment":
        doc = json.loads(text)
        return cls({int(e["rrh_id"]): [Segment(int(s["start"]), int(s["count"]),
                                               int(s["position"]), int(s.get("delay", 0)))
                                       for s in e["segments"]]
                    for e in doc}, kind)

    def rrh_specs(self, topology: RingTopology, params: CapacityParams) -> list[RrhSpec]:
        P = params.period
        return [RrhSpec(rid, topology.rrh_nodes[rid], off % P, params.emission_time,
                        params.acceleration, P)
                for rid, off in sorted(self.offsets.items())]


# -- capacity ---------------------------------------------------------------

def max_antennas_zero_latency(params: CapacityParams) -> int:
    return params.per_position * (params.acceleration // 2)


def max_antennas_saturating(params: CapacityParams) -> int:
    # floor of the real product, kept in integers
    return ((params.period - params.ring_size) * params.acceleration) // (2 * params.emission_time)


# -- building blocks --------------------------------------------------------

def cycle_order(topology: RingTopology, rrhs: Optional[Sequence[int]] = None) -> list[int]:
    """RRH ids in ring order, starting just after the BBU node."""
    rrhs = range(topology.k) if rrhs is None else rrhs
    v = topology.bbu_node
    return sorted(rrhs, key=lambda r: (topology.distance(v, topology.rrh_nodes[r]), r))


def _position(topology: RingTopology, F: int, node: int, t: int) -> int:
    return (t + topology.transit(node)) % F


def _phase_start(topology: RingTopology, F: int, node: int, position: int) -> int:
    """Earliest fill time in [0, F) at ``node`` landing on ``position``."""
    return (position - topology.transit(node)) % F


def _check_params(topology: RingTopology, params: CapacityParams) -> None:
    if topology.ring_size != params.ring_size:
        raise ValueError(f"topology ring size {topology.ring_size} != params {params.ring_size}")
    if topology.k != params.k:
        raise ValueError(f"topology has {topology.k} RRHs, params say k={params.k}")


def _chain(topology: RingTopology, params: CapacityParams, members: Sequence[int],
           position: int, start: Optional[int] = None,
           gaps: Optional[Sequence[int]] = None) -> dict[int, list[Segment]]:
    """Back-to-back blocks on one position in ring order.

    Member i+1 starts ET + gap_i after member i, where by default the gap is
    the distance between their nodes: the first container it reuses has
    just been released by member i.
    """
    if not members:
        return {}
    P, ET, F = params.period, params.emission_time, params.acceleration
    if len(members) * ET + params.ring_size > P:
        raise CapacityExceeded(f"{len(members)} RRHs x ET={ET} + RS={params.ring_size} > P={P}")
    nodes = [topology.rrh_nodes[r] for r in members]
    if gaps is None:
        gaps = [topology.distance(a, b) for a, b in zip(nodes, nodes[1:])]
    t = _phase_start(topology, F, nodes[0], position) if start is None else start
    out = {}
    for i, rid in enumerate(members):
        out[rid] = [Segment(t % P, ET // F, position)]
        if i < len(gaps):
            t += ET + gaps[i]
    return out


def _groups(assignment: Assignment, topology: RingTopology) -> dict[int, list[int]]:
    by_pos: dict[int, list[int]] = {}
    for rid, segs in assignment.segments.items():
        if len(segs) != 1:
            raise ValueError("operation needs single-segment (zero latency) assignments")
        by_pos.setdefault(segs[0].position, []).append(rid)
    return {p: cycle_order(topology, rids) for p, rids in sorted(by_pos.items())}


# -- zero-latency constructions ---------------------------------------------

def prop1_assign(params: CapacityParams, topology: RingTopology) -> Assignment:
    """All RRHs on position 0, back to back in ring order.

    Valid whenever k*ET + RS <= P.
    """
    _check_params(topology, params)
    if params.k * params.emission_time + params.ring_size > params.period:
        raise CapacityExceeded(
            f"k*ET + RS = {params.k * params.emission_time + params.ring_size} > P = {params.period}")
    return Assignment(_chain(topology, params, cycle_order(topology), 0), "prop1")


def naive_assign(params: CapacityParams, topology: RingTopology) -> Assignment:
    _check_params(topology, params)
    if params.k > max_antennas_zero_latency(params):
        raise CapacityExceeded(f"k={params.k} > {max_antennas_zero_latency(params)}")
    half = params.acceleration // 2
    order = cycle_order(topology)
    segs = {}
    for p in range(half):
        segs.update(_chain(topology, params, order[p::half], 2 * p))
    return Assignment(segs, "naive")


def compact_positions(params: CapacityParams, topology: RingTopology) -> Assignment:
    """Fill each position with as many whole RRH blocks as fit."""
    _check_params(topology, params)
    cap = params.per_position
    if cap == 0:
        raise CapacityExceeded("ET + RS > P: no RRH fits on a position")
    used = math.ceil(params.k / cap)
    if used > params.acceleration // 2:
        raise CapacityExceeded(f"{used} positions needed, {params.acceleration // 2} available")
    order = cycle_order(topology)
    segs = {}
    for i in range(used):
        segs.update(_chain(topology, params, order[i * cap:(i + 1) * cap], 2 * i))
    return Assignment(segs, "compact")


def needed_positions(params: CapacityParams) -> int:
    """Position count as stated for the used-position spreading, ceil(k*ET/(P-RS))."""
    return math.ceil(params.k * params.emission_time / (params.period - params.ring_size))


def _water_fill(base: list[int], spare: int, unit: int) -> list[int]:
    """Add ``spare`` (a multiple of ``unit``) to ``base`` raising the smallest first."""
    gaps = list(base)
    heap = [(g, i) for i, g in enumerate(gaps)]
    heapq.heapify(heap)
    for _ in range(spare // unit):
        g, i = heapq.heappop(heap)
        gaps[i] = g + unit
        heapq.heappush(heap, (gaps[i], i))
    return gaps


def balance_period(assignment: Assignment, topology: RingTopology,
                   params: CapacityParams) -> Assignment:
    """Spread free containers evenly over the period.

    Inside each position the idle time between consecutive blocks is
    equalised (in steps of F so positions are kept), and the positions are
    staggered against each other.
    """
    P, RS, ET, F = params.period, params.ring_size, params.emission_time, params.acceleration
    groups = _groups(assignment, topology)
    x = len(groups)
    segs = {}
    for q, (p, members) in enumerate(groups.items()):
        nodes = [topology.rrh_nodes[r] for r in members]
        j = len(members)
        need = [topology.distance(a, b) for a, b in zip(nodes, nodes[1:])]
        need.append(topology.omega(nodes[-1], nodes[0]) if j > 1 else RS)
        spare = P - j * ET - sum(need)
        if spare < 0:
            raise Infeasible(f"position {p}: {j} blocks leave no room for the ring distances")
        gaps = _water_fill(need, spare, F)
        target = q * P / (x * j)
        start = _phase_start(topology, F, nodes[0], p) + F * round(target / F)
        segs.update(_chain(topology, params, members, p, start % P, gaps[:-1]))
    return Assignment(segs, (assignment.kind + "+" if assignment.kind else "") + "balance")


def spread_positions(x: int, F: int) -> list[int]:
    """x width-2 pair starts spread over F positions; gaps differ by at most one."""
    if 2 * x > F:
        raise Infeasible(f"{x} position pairs do not fit in F={F}")
    return [q * F // x for q in range(x)]


def balance_used_positions(assignment: Assignment, topology: RingTopology,
                           params: CapacityParams, x: Optional[int] = None) -> Assignment:
    groups = _groups(assignment, topology)
    used = list(groups)
    x = len(used) if x is None else x
    if x != len(used):
        raise ValueError(f"assignment uses {len(used)} positions, not {x}")
    P = params.period
    segs = {}
    for old, new in zip(used, spread_positions(x, params.acceleration)):
        shift = new - old
        for rid in groups[old]:
            s = assignment.segments[rid][0]
            segs[rid] = [Segment((s.start + shift) % P, s.count, new, s.delay)]
    return Assignment(segs, (assignment.kind + "+" if assignment.kind else "") + "used")


# -- saturating positions -----------------------------------------------------

def saturate_positions(params: CapacityParams, topology: RingTopology) -> Assignment:
    """Use every container of a position; one RRH per position change straddles.

    The straddling RRH sends what still fits on the current position, then
    switches to the next even position 2 UoT later, so its remaining packets
    wait exactly 2 UoT.
    """
    _check_params(topology, params)
    P, ET, F = params.period, params.emission_time, params.acceleration
    if params.per_position == 0:
        raise CapacityExceeded("ET + RS > P: no RRH fits on a position")
    if params.k > max_antennas_saturating(params):
        raise CapacityExceeded(f"k={params.k} > {max_antennas_saturating(params)}")
    order = cycle_order(topology)
    segs: dict[int, list[Segment]] = {}
    if not order:
        return Assignment(segs, "saturate")
    pos = 0
    head = topology.rrh_nodes[order[0]]
    chain_start = _phase_start(topology, F, head, pos)
    t = chain_start  # first free fill time on the position, at the previous node
    prev = head
    for rid in order:
        u = topology.rrh_nodes[rid]
        start = t + topology.distance(prev, u)
        limit = chain_start + P - topology.omega(u, head)
        avail = limit - start
        if avail >= ET:
            segs[rid] = [Segment(start % P, ET // F, pos)]
            t = start + ET
        else:
            pos += 2
            if pos >= F:
                raise CapacityExceeded("ran out of positions")
            new_start = limit + 2
            if avail > 0:
                segs[rid] = [Segment(start % P, avail // F, pos - 2),
                             Segment(new_start % P, (ET - avail) // F, pos, delay=2)]
            else:
                segs[rid] = [Segment(new_start % P, ET // F, pos)]
            head, chain_start = u, new_start
            t = new_start + ET - max(avail, 0)
        prev = u
    return Assignment(segs, "saturate")


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class Validity:
    valid: bool
    detail: str = ""
    time: int = -1
    node: int = -1
    max_latency: int = 0

    def __bool__(self):
        return self.valid


def _warmup(params: CapacityParams, bound: int) -> int:
    need = 2 * params.ring_size + 3 + bound
    return params.period * (max(1, math.ceil(need / params.period)) + 1)


def check_validity(assignment: Assignment, topology: RingTopology, params: CapacityParams,
                   periods: int = 3) -> Validity:
    """Brute-force check by simulating reservations and emissions without BE.

    Valid when no reservation or fill is refused and every C-RAN packet
    leaves within the assignment's declared delay.
    """
    bound = assignment.max_delay
    for rid, segs in assignment.segments.items():
        if sum(s.count for s in segs) != params.packets:
            return Validity(False, f"RRH {rid} sends {sum(s.count for s in segs)} packets, "
                                   f"expected {params.packets}")
    warm = _warmup(params, bound)
    res = simulate(topology, params.period, params.acceleration,
                   assignment.rrh_specs(topology, params),
                   DeterministicReservation(assignment), warm + periods * params.period,
                   warmup=warm, params=params, strict=False)
    if res.faults:
        t, node, msg = res.faults[0]
        return Validity(False, msg, t, node)
    worst = 0
    for c in (CRAN_UP, CRAN_DOWN):
        if res.histogram.total(c):
            worst = max(worst, res.histogram.max(c))
    if worst > bound:
        return Validity(False, f"C-RAN latency {worst} exceeds bound {bound}", max_latency=worst)
    if res.max_stale > bound:
        return Validity(False, f"C-RAN packet left unsent for {res.max_stale} UoT",
                        max_latency=res.max_stale)
    return Validity(True, max_latency=worst)


def waste_by_position(assignment: Assignment, topology: RingTopology, params: CapacityParams,
                      periods: int = 3) -> dict[int, Fraction]:
    """Reserved-but-empty ring capacity per position, in UoT per period."""
    warm = _warmup(params, assignment.max_delay)
    res = simulate(topology, params.period, params.acceleration,
                   assignment.rrh_specs(topology, params),
                   DeterministicReservation(assignment), warm + periods * params.period,
                   warmup=warm, params=params, strict=True)
    return waste_and_load_counters(res.counters)["waste_by_position"]


def waste(assignment: Assignment, topology: RingTopology, params: CapacityParams) -> Fraction:
    return sum(waste_by_position(assignment, topology, params).values(), Fraction(0))


SCHEDULERS = {
    "prop1": prop1_assign,
    "naive": naive_assign,
    "compact": compact_positions,
    "saturate": saturate_positions,
    "balance_period": lambda p, t: balance_period(naive_assign(p, t), t, p),
    "compact_balance": lambda p, t: balance_period(compact_positions(p, t), t, p),
    "balance_used": lambda p, t: balance_used_positions(compact_positions(p, t), t, p),
    "combined": lambda p, t: balance_used_positions(
        balance_period(compact_positions(p, t), t, p), t, p),
}


def build_assignment(name: str, params: CapacityParams, topology: RingTopology) -> Assignment:
    try:
        fn = SCHEDULERS[name]
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}") from None
    return fn(params, topology)
