"""
An epidemic on a random contact network, with and without quarantine
====================================================================

1000 agents with Poisson(8) contacts.  The simulated infected fraction is
compared with the deterministic edge-based model, then a quarantine that
kicks in above 5% infected is switched on.
"""

import numpy as np

from ebdevs.models import epidemic
from ebdevs.stats import uniform_grid

grid = uniform_grid(4.0, 9)

# %% mean of a few realisations against the deterministic curve
runs = [epidemic.run({}, seed=s, sample_times=grid) for s in range(10)]
mean_i = np.mean([r.series["I_frac"].values for r in runs], axis=0)
ode = epidemic.integrate_ode(epidemic.initial_ode_state(1000, 8.0), 3.0, 1.0, 4.0, sample_times=grid)
for t, sim_i, ode_i in zip(grid, mean_i, ode["I_frac"].values):
    print(f"t={t:4.1f}  simulated I {sim_i:.3f}  ODE I {ode_i:.3f}")

# %% quarantine lowers the peak
for params in ({}, {"QT": 0.05, "QA": 1.0}):
    peaks = [epidemic.run(params, seed=s, t_end=10).final["peak_I"] for s in range(10)]
    print(params or "no quarantine", "mean peak I:", round(float(np.mean(peaks)), 3))
