"""Discrete-time simulation of the ring under one insertion policy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .metrics import LatencyHistogram, RingCounters
from .policies import (DeterministicReservation, ReservationPlan, ScheduleError,
                       make_buffer)
from .ring import Ring, RingTopology
from .traffic import BEST_EFFORT, CRAN_DOWN, CRAN_UP, Packet, RrhSpec


@dataclass
class SimResult:
    histogram: LatencyHistogram
    counters: RingCounters
    faults: list = field(default_factory=list)
    backlog: int = 0
    max_stale: int = 0


def simulate(topology: RingTopology, period: int, acceleration: int,
             rrhs: Sequence[RrhSpec], policy, horizon: int, warmup: int = 0,
             be_times: Optional[Sequence[np.ndarray]] = None,
             plan: Optional[ReservationPlan] = None, params=None,
             strict: bool = True, cran_start: int = 0) -> SimResult:
    """Run ``horizon`` UoT and collect latencies of packets enqueued after ``warmup``.

    ``be_times[node]`` holds the BE packet arrival ticks of each node.  Under
    a deterministic policy, refused reservations or fills raise
    :class:`ScheduleError` when ``strict``; otherwise they are collected in
    ``faults`` and the run continues.
    """
    P, F = period, acceleration
    ring = Ring(topology)
    ring.set_window(warmup, horizon)
    n = topology.node_count
    v = topology.bbu_node
    back = [topology.transit(u) + 1 for u in range(n)]
    deterministic = isinstance(policy, DeterministicReservation)
    if deterministic and plan is None:
        plan = ReservationPlan.build(policy.assignment, topology, params)
    bufs = [make_buffer(policy) for _ in range(n)]
    lat = {CRAN_UP: [], CRAN_DOWN: [], BEST_EFFORT: []}
    faults: list = []

    arrivals = [[] for _ in range(P)]
    for r in rrhs:
        for ph in r.emission_phases():
            arrivals[ph].append((r.node, r.rrh_id))
    for lst in arrivals:
        lst.sort(key=lambda x: x[1])
    replies: dict[int, list] = {}

    if be_times is not None and any(len(x) for x in be_times):
        tt = np.concatenate([np.asarray(x, dtype=np.int64) for x in be_times])
        nn = np.concatenate([np.full(len(x), i, dtype=np.int64) for i, x in enumerate(be_times)])
        order = np.lexsort((nn, tt))
        be_t = tt[order].tolist()
        be_n = nn[order].tolist()
    else:
        be_t, be_n = [], []
    be_t.append(horizon + 1)
    bi = 0

    if deterministic:
        active = plan.active_phases()
        reserve_at, fill_at = plan.reserve_at, plan.fill_at
        # no reservation can exist before t = RS, so C-RAN sources start then
        RS = topology.ring_size
        cran_start = max(cran_start, RS)
        check_from = max(warmup, 2 * RS + 3 + plan.bound)
    for ph, lst in enumerate(arrivals):
        if lst and deterministic:
            active[ph] = True
    if not deterministic:
        active = [bool(lst) for lst in arrivals]

    def fault(msg, t, node):
        if strict:
            raise ScheduleError(msg, t, node)
        faults.append((t, node, msg))

    queued = 0
    rfill = ring.fill
    for t in range(horizon):
        ring.t = t
        ph = t % P
        if not active[ph] and be_t[bi] != t and not queued and t not in replies:
            continue
        # arrivals, C-RAN ahead of BE
        if t >= cran_start:
            for node, rid in arrivals[ph]:
                bufs[node].push(Packet(t, CRAN_UP, rid))
                queued += 1
        rep = replies.pop(t, None)
        if rep:
            for rid in sorted(rep):
                bufs[v].push(Packet(t, CRAN_DOWN, rid))
                queued += 1
        while be_t[bi] == t:
            node = be_n[bi]
            bufs[node].push(Packet(t, BEST_EFFORT, node))
            queued += 1
            bi += 1

        if deterministic:
            for node, key in reserve_at[ph]:
                if not ring.reserve(node):
                    fault(f"reservation refused for stream {key}", t, node)
            for node, key in fill_at[ph]:
                q = bufs[node].streams.get(key)
                if not q or q[0].enqueue_time > t:
                    if t >= check_from:
                        fault(f"no packet for scheduled emission of stream {key}", t, node)
                    continue
                if not rfill(node, key[0]):
                    fault(f"container refused to stream {key}", t, node)
                    continue
                pkt = q.popleft()
                queued -= 1
                if pkt.enqueue_time >= warmup:
                    lat[pkt.cls].append(t - pkt.enqueue_time)
                if pkt.cls == CRAN_UP:
                    replies.setdefault(t + back[node], []).append(pkt.source_id)
            if queued:
                for node in range(n):
                    be = bufs[node].be
                    if be and rfill(node, BEST_EFFORT):
                        pkt = be.popleft()
                        queued -= 1
                        if pkt.enqueue_time >= warmup:
                            lat[BEST_EFFORT].append(t - pkt.enqueue_time)
        elif queued:
            for node in range(n):
                buf = bufs[node]
                if not len(buf) or not ring.fillable(node):
                    continue
                pkt = buf.select(True)
                rfill(node, pkt.cls)
                queued -= 1
                if pkt.enqueue_time >= warmup:
                    lat[pkt.cls].append(t - pkt.enqueue_time)
                if pkt.cls == CRAN_UP:
                    replies.setdefault(t + back[node], []).append(pkt.source_id)

    ring.t = horizon
    ring.close(horizon)
    hist = LatencyHistogram()
    for c, xs in lat.items():
        hist.add(c, np.asarray(xs, dtype=np.int64))

    max_stale = 0
    for b in bufs:
        queues = list(b.streams.values()) if hasattr(b, "streams") else []
        for q in queues:
            if q:
                max_stale = max(max_stale, horizon - 1 - q[0].enqueue_time)
    blocked = [0] * F
    base_v = topology.offsets[v]
    for c, b in enumerate(ring.blocked):
        if b:
            blocked[(c + base_v) % F] += b
    counters = RingCounters(tuple(ring.fills), ring.unused_reservations, tuple(blocked),
                            horizon - warmup, P, topology.ring_size, F)
    return SimResult(hist, counters, faults, queued, max_stale)
