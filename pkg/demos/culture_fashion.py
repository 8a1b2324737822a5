"""
Cultural drift with and without a fashion field
===============================================

Agents on a 10x10 lattice copy traits from similar neighbours.  With many
possible traits the lattice freezes into several cultural regions; when
agents follow the current fashion instead, one culture takes over.
"""

from ebdevs.models import culture

# %% classic dynamics: few traits merge, many traits stay fragmented
for Q in (5, 20):
    counts = [culture.run({"Q": Q}, seed=s, t_end=3000).final["distinct_cultures"] for s in range(3)]
    print(f"Q={Q:2d} fashion off -> distinct cultures per run: {counts}")

# %% always follow the fashion
for Q in (5, 20):
    res = culture.run({"Q": Q, "fashion_rate": 1.0}, seed=0, t_end=200)
    series = res.series["distinct_cultures"]
    print(f"Q={Q:2d} fashion on  -> {series.values[0]} cultures at t=0, {series.values[-1]} at t=200")
