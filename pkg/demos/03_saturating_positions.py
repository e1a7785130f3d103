"""Letting one RRH per position jump to the next one fills every container.

With the baseline parameters whole-block packing fits 5 RRHs; letting a
straddling RRH finish its burst 2 UoT later on the next position fits 9.
"""

from ngreen.engine import simulate
from ngreen.policies import DeterministicReservation
from ngreen.ring import RingTopology
from ngreen.scheduler import CapacityParams, check_validity, saturate_positions
from ngreen.traffic import CRAN_UP

for k in (5, 9):
    params = CapacityParams.baseline(k)
    topo = RingTopology.equidistant(5, 100, [i % 5 for i in range(k)])
    a = saturate_positions(params, topo)
    print(f"k={k} valid={bool(check_validity(a, topo, params))}")
    for rid, segs in sorted(a.segments.items()):
        print("   ", rid, [(s.start, s.count, s.position, s.delay) for s in segs])
    res = simulate(topo, 1000, 10, a.rrh_specs(topo, params), DeterministicReservation(a),
                   10_000, warmup=3000, params=params)
    up = res.histogram.counts[CRAN_UP]
    print("    uplink latency counts:", {i: int(c) for i, c in enumerate(up) if c})
