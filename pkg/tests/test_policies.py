from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ngreen import engine
from ngreen.engine import simulate
from ngreen.policies import (CranPriority, DeterministicReservation, Fifo, FifoBuffer,
                             PriorityBuffer, ReservationPlan, ScheduleError, cran_priority_select,
                             fifo_select, make_buffer, reservation_drive)
from ngreen.ring import Ring, RingTopology
from ngreen.scheduler import Assignment, CapacityParams, Segment
from ngreen.traffic import BEST_EFFORT, CRAN_DOWN, CRAN_UP, Packet, RrhSpec


def test_fifo_takes_oldest():
    buf = deque([Packet(3, BEST_EFFORT, 0), Packet(5, CRAN_UP, 1)])
    assert fifo_select(buf, True) == Packet(3, BEST_EFFORT, 0)
    assert fifo_select(buf, False) is None
    assert len(buf) == 1


def test_fifo_same_tick_prefers_cran():
    b = FifoBuffer()
    # the engine pushes C-RAN before BE inside a tick
    b.push(Packet(4, CRAN_UP, 0))
    b.push(Packet(4, BEST_EFFORT, 0))
    assert b.select().cls == CRAN_UP


def test_priority_rule():
    assert cran_priority_select(deque([Packet(10, CRAN_UP, 0)]), deque([Packet(2, BEST_EFFORT, 0)]),
                                True).enqueue_time == 10
    assert cran_priority_select(deque(), deque([Packet(2, BEST_EFFORT, 0)]), True).enqueue_time == 2
    assert cran_priority_select(deque(), deque(), True) is None


@given(st.lists(st.tuples(st.integers(0, 50), st.sampled_from([CRAN_UP, CRAN_DOWN, BEST_EFFORT])),
                max_size=30))
def test_priority_never_serves_be_before_cran(items):
    b = PriorityBuffer()
    for t, c in sorted(items):
        b.push(Packet(t, c, 0))
    served = []
    while len(b):
        served.append(b.select().cls)
    assert served == sorted(served, key=lambda c: c == BEST_EFFORT)


def test_make_buffer_kinds():
    assert isinstance(make_buffer(Fifo()), FifoBuffer)
    assert isinstance(make_buffer(CranPriority()), PriorityBuffer)


def test_reservation_drive_timing():
    topo = RingTopology.equidistant(5, 100, (0,), 0)
    params = CapacityParams(1000, 100, 10, 10, 1)
    plan = ReservationPlan.build(Assignment({0: [Segment(300, 1, 0)]}), topo, params)
    assert reservation_drive(plan, 0, 200) == ([(CRAN_UP, 0)], [])
    assert reservation_drive(plan, 0, 300) == ([], [(CRAN_UP, 0)])
    # reply: transit of a full turn plus one
    assert reservation_drive(plan, 0, 401) == ([], [(CRAN_DOWN, 0)])
    assert reservation_drive(plan, 0, 301) == ([(CRAN_DOWN, 0)], [])
    assert reservation_drive(plan, 3, 200) == ([], [])


def test_zero_latency_with_reservation():
    topo = RingTopology.equidistant(5, 100, (0,), 0)
    params = CapacityParams(1000, 100, 10, 10, 1)
    a = Assignment({0: [Segment(300, 1, 0)]})
    res = simulate(topo, 1000, 10, a.rrh_specs(topo, params), DeterministicReservation(a),
                   5000, warmup=1000, params=params)
    assert res.histogram.max(CRAN_UP) == 0 and res.histogram.total(CRAN_UP) == 4


def test_colliding_streams_abort():
    topo = RingTopology.equidistant(5, 100, (1, 1), 0)
    params = CapacityParams(1000, 100, 100, 10, 2)
    a = Assignment({0: [Segment(300, 10, 0)], 1: [Segment(300, 10, 0)]})
    with pytest.raises(ScheduleError):
        simulate(topo, 1000, 10, a.rrh_specs(topo, params), DeterministicReservation(a),
                 3000, params=params)


def test_be_only_node_is_plain_fifo():
    topo = RingTopology.equidistant(2, 10, (), 0)
    be = [[5, 5, 6], []]
    res = simulate(topo, 100, 2, [], DeterministicReservation(Assignment()), 200, be_times=be,
                   params=CapacityParams(100, 10, 2, 2, 0))
    # one packet per passing container
    assert sorted(res.histogram.counts[BEST_EFFORT].nonzero()[0].tolist()) == [0, 1]


class _Recorder(Ring):
    log: list = []

    def fillable(self, node):
        ok = super().fillable(node)
        _Recorder.log.append(("seen", self.t, node, ok))
        return ok

    def fill(self, node, cls):
        ok = super().fill(node, cls)
        _Recorder.log.append(("fill", self.t, node, ok))
        return ok


@pytest.mark.parametrize("policy", [Fifo(), CranPriority()])
def test_work_conserving(policy, monkeypatch):
    monkeypatch.setattr(engine, "Ring", _Recorder)
    _Recorder.log = []
    topo = RingTopology.equidistant(3, 30, (0, 1, 2), 0)
    rrhs = [RrhSpec(i, i, 7 * i, 20, 2, 120) for i in range(3)]
    be = [list(range(0, 3000, 4)), list(range(1, 3000, 5)), []]
    res = engine.simulate(topo, 120, 2, rrhs, policy, 3000, be_times=be)
    log = _Recorder.log
    seen = [e for e in log if e[0] == "seen" and e[3]]
    fills = {(e[1], e[2]) for e in log if e[0] == "fill" and e[3]}
    assert seen and all((t, node) in fills for _, t, node, _ in seen)
    for c in (CRAN_UP, CRAN_DOWN, BEST_EFFORT):
        assert res.histogram.total(c) > 0
