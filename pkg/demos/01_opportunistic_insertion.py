"""FIFO against C-RAN priority when offsets are random.

Five nodes, one RRH per node, BBU on node 0.  C-RAN fills half the ring and
best effort another 40%.
"""

from ngreen.harness import ExperimentConfig, run_experiment
from ngreen.traffic import BEST_EFFORT, CRAN_DOWN, CRAN_UP

base = ExperimentConfig(horizon=100_000, replications=5, master_seed=1)

for policy in ("fifo", "cran_priority"):
    res = run_experiment(base.replace(policy=policy))
    h = res.histogram
    print(policy)
    for cls, name in ((CRAN_UP, "up"), (CRAN_DOWN, "down"), (BEST_EFFORT, "be")):
        print(f"  {name:<5} mean {h.mean(cls):7.2f}  p90 {h.quantile(cls, 0.9):4d}"
              f"  p99 {h.quantile(cls, 0.99):4d}  max {h.max(cls)}")

# Priority cuts C-RAN waiting sharply but best effort pays for it, and a
# tail of C-RAN packets still waits tens of UoT.  Random offsets alone
# cannot give the zero-wait guarantee fronthaul needs.
