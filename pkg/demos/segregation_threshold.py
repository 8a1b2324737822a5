"""
How demanding neighbours stop a city from settling
==================================================

266 agents of two colours on a 20x20 grid move to a random empty cell while
too few of their neighbours share their colour.  Mild preferences settle
quickly; at HT=0.95 almost nobody is ever content.
"""

from ebdevs.models import segregation

for ht in (0.2, 0.35, 0.5, 0.65, 0.8, 0.95):
    runs = [segregation.run({"HT": ht}, seed=s, t_end=40) for s in range(5)]
    settled = [r.final["converged_at"] for r in runs]
    left = [round(r.final["unhappy_fraction"], 3) for r in runs]
    print(f"HT={ht:.2f}  settled at {settled}  unhappy at t=40 {left}")
