"""Offset assignments with reservations: every C-RAN packet leaves at once."""

from ngreen.ring import RingTopology
from ngreen.scheduler import (CapacityParams, build_assignment, check_validity,
                              max_antennas_zero_latency, waste_by_position)

params = CapacityParams(period=1000, ring_size=100, emission_time=200, acceleration=10, k=12)
topo = RingTopology.equidistant(5, 100, [i % 5 for i in range(12)], bbu_node=0)
print("zero-latency capacity:", max_antennas_zero_latency(params))

for name in ("naive", "compact", "compact_balance", "balance_used"):
    a = build_assignment(name, params, topo)
    v = check_validity(a, topo, params)
    w = waste_by_position(a, topo, params)
    print(f"{name:<16} valid={v.valid} positions={a.rrh_positions()} "
          f"reserved-free per period={float(sum(w.values())):.0f}")
    for rid, segs in sorted(a.segments.items())[:3]:
        s = segs[0]
        print(f"    rrh {rid}: start {s.start:4d} position {s.position} packets {s.count}")

# Packing RRHs onto few positions keeps the waste down: each used position
# loses about one ring turn of capacity to reservations.  Spreading the used
# positions apart then evens out where free containers show up.
