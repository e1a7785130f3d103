"""Packet sources: periodic RRH uplink, BBU replies and bursty best effort."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class TrafficClass(enum.IntEnum):
    # order doubles as the FIFO tie-break: C-RAN before best effort
    CRAN_UP = 0
    CRAN_DOWN = 1
    BEST_EFFORT = 2


CRAN_UP, CRAN_DOWN, BEST_EFFORT = (int(c) for c in TrafficClass)


class Packet(NamedTuple):
    """A container-sized packet waiting in an insertion buffer.

    Tuples compare as (enqueue_time, class, source_id), which is the FIFO
    service order.
    """
    enqueue_time: int
    cls: int
    source_id: int
    size: int = 0


@dataclass(frozen=True)
class RrhSpec:
    rrh_id: int
    node: int
    offset: int
    emission_time: int
    acceleration: int
    period: int

    def __post_init__(self):
        if self.emission_time % self.acceleration:
            raise ValueError("emission time must be a multiple of the acceleration factor")
        if not 0 < self.emission_time <= self.period:
            raise ValueError("emission time must lie in (0, P]")

    @property
    def packets_per_period(self) -> int:
        return self.emission_time // self.acceleration

    def emits(self, t: int) -> bool:
        d = (t - self.offset) % self.period
        return d < self.emission_time and d % self.acceleration == 0

    def emission_phases(self) -> list[int]:
        """Arrival times within one period, as residues mod P."""
        return [(self.offset + j * self.acceleration) % self.period
                for j in range(self.packets_per_period)]


def rrh_emissions(rrh: RrhSpec, t: int) -> Optional[Packet]:
    if t >= 0 and rrh.emits(t):
        return Packet(t, CRAN_UP, rrh.rrh_id)
    return None


def bbu_reply(rrh_id: int, t_arr: int) -> Packet:
    """Downlink answer to an uplink packet read at the BBU node at t_arr."""
    return Packet(t_arr + 1, CRAN_DOWN, rrh_id)


@dataclass(frozen=True)
class BeArrivalSpec:
    """Bimodal batch arrivals feeding a contention buffer.

    Each UoT the node receives ``q_high`` bytes with probability ``p_high``
    and ``q_low`` bytes otherwise.  A packet is cut when ``capacity`` bytes
    are buffered or when the oldest byte has waited ``t_max`` UoT.
    """

    p_high: float = 0.05
    q_high: float = 12_500
    q_low: float = 0.0
    capacity: float = 12_500
    t_max: int = 100

    def __post_init__(self):
        if not 0.0 <= self.p_high <= 1.0:
            raise ValueError("p_high must be a probability")
        if self.q_high < 0 or self.q_low < 0:
            raise ValueError("batch sizes must be non-negative")
        if self.capacity <= 0 or self.t_max < 1:
            raise ValueError("capacity and t_max must be positive")

    @property
    def expected_load(self) -> float:
        """Mean containers per UoT this node injects."""
        return (self.p_high * self.q_high + (1 - self.p_high) * self.q_low) / self.capacity

    @classmethod
    def for_load(cls, load: float, capacity: float = 12_500, p_high: float = 0.05,
                 q_high: Optional[float] = None, t_max: int = 100) -> "BeArrivalSpec":
        """Pick q_low so that the node injects ``load`` containers per UoT."""
        q_high = capacity if q_high is None else q_high
        if load <= 0:
            return cls(0.0, q_high, 0.0, capacity, t_max)
        q_low = (load * capacity - p_high * q_high) / (1 - p_high)
        if q_low < 0:
            raise ValueError(f"load {load} below the high-mode contribution; lower p_high")
        return cls(p_high, q_high, q_low, capacity, t_max)


class BestEffortSource:
    """Contention buffer of one node.  Call ``step(t)`` once per UoT."""

    def __init__(self, spec: BeArrivalSpec, rng: np.random.Generator, source_id: int = 0,
                 chunk: int = 4096):
        self.spec = spec
        self.rng = rng
        self.source_id = source_id
        self._chunk = chunk
        self._draws = np.empty(0)
        self._i = 0
        self._chunks: deque = deque()  # [arrival_time, bytes]
        self.buffered = 0.0
        self.drawn = 0.0
        self.shipped = 0.0

    def _batch(self) -> float:
        if self._i >= len(self._draws):
            self._draws = self.rng.random(self._chunk)
            self._i = 0
        u = self._draws[self._i]
        self._i += 1
        return self.spec.q_high if u < self.spec.p_high else self.spec.q_low

    def step(self, t: int) -> Optional[Packet]:
        spec = self.spec
        q = self._batch()
        if q > 0:
            self._chunks.append([t, q])
            self.buffered += q
            self.drawn += q
        if not self._chunks:
            return None
        if self.buffered >= spec.capacity:
            size = spec.capacity
        elif t - self._chunks[0][0] >= spec.t_max:
            size = self.buffered
        else:
            return None
        self._take(size)
        return Packet(t, BEST_EFFORT, self.source_id, size)

    def _take(self, size: float) -> None:
        left = size
        chunks = self._chunks
        while chunks and left > 0:
            head = chunks[0]
            if head[1] <= left:
                left -= head[1]
                chunks.popleft()
            else:
                head[1] -= left
                left = 0
        self.buffered -= size
        if not chunks:
            self.buffered = 0.0
        self.shipped += size


def be_arrivals(spec: BeArrivalSpec, horizon: int, rng: np.random.Generator,
                source_id: int = 0) -> np.ndarray:
    """Insertion-buffer arrival times of BE packets over [0, horizon)."""
    if spec.expected_load == 0:
        return np.empty(0, dtype=np.int64)
    src = BestEffortSource(spec, rng, source_id)
    step = src.step
    return np.fromiter((t for t in range(horizon) if step(t) is not None), dtype=np.int64)
