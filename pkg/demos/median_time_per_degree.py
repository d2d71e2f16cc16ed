"""
Median reception time by degree
===============================

A node with k links hears the message from whichever informed neighbour
fires first, so better-connected nodes are informed sooner.  The
benefit flattens out: each extra link saves less time than the one
before.  This script prints the per-degree median reception time and
the successive savings.  Large degrees are rare in these networks, so
their medians rest on a handful of nodes per run and the last few
savings are noisy at this ensemble size.

Run with ``python demos/median_time_per_degree.py``.
"""

import numpy as np

from infoprop import DegreeDistribution, NetworkSpec, aggregate, run_ensemble

n = 2000
for name, dist in (("power law 2.75", DegreeDistribution.power_law(2.75, 2, n=n)),
                   ("Poisson 4.58", DegreeDistribution.poisson(4.58, 1, n=n))):
    res = run_ensemble(NetworkSpec(dist, n), 1.0, 200, master_seed=5)
    stats = aggregate(res.records, clip_milestones=True)
    ks, t = stats.median_curve()
    keep = ks <= 12
    ks, t = ks[keep], t[keep]
    print(f"{name}: {stats.accepted_runs} runs")
    print("   k  median t   saving vs k-1")
    for j, (kk, tt) in enumerate(zip(ks, t)):
        saving = f"{t[j - 1] - tt:.4f}" if j else ""
        print(f"{kk:4d} {tt:9.4f} {saving:>14}")
    print()
