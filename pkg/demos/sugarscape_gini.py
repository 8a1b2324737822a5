"""
Capping greed with a wealth-inequality signal
=============================================

Agents roam a two-peaked sugar landscape.  When the Gini index of wealth
reaches ``gini_cutoff`` they eat only what they burn, which holds inequality
near the cutoff.
"""

from ebdevs.models import sugarscape

for cutoff in (1.0, 0.4, 0.3, 0.2):
    late = [sugarscape.run({"gini_cutoff": cutoff}, seed=s, t_end=100).final["late_gini"] for s in range(3)]
    print(f"cutoff {cutoff:.1f}: late-time Gini {[round(g, 3) for g in late]}")
