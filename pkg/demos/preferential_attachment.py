"""
Rich-get-richer network growth
==============================

Each new node links to an existing node picked in proportion to its degree.
The degree distribution develops a heavy tail, read off a log-log fit of its
complementary CDF.
"""

import numpy as np

from ebdevs.models import network
from ebdevs.stats import degree_histogram, loglog_slope

res = network.run({"connect_to": 1}, seed=1, t_end=2000)
degrees = res.final["degrees"]
print("nodes", res.final["nodes"], "edges", res.final["edges"], "max degree", max(degrees))

# %% tail of the degree distribution
_, ccdf = degree_histogram(degrees)
slope, r2 = loglog_slope(ccdf, (2, max(degrees) / 4))
print(f"CCDF slope {slope:.2f} (r^2 {r2:.3f})")

# %% early nodes collect far more links than late ones
print("mean degree of nodes 2..11:", np.mean(degrees[2:12]))
print("mean degree of the last 10:", np.mean(degrees[-10:]))
