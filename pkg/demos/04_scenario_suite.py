"""A small run of the full comparison matrix.

Every run of one replication shares its best-effort arrivals, so the
orderings are judged on paired differences.  Use the ``ngreen suite``
command for larger runs.
"""

from ngreen.harness import format_report, paper_suite

report = paper_suite(replications=5, horizon=50_000, master_seed=0)
print(format_report(report))
