"""MVGMP against a rate-adaptive multicast baseline under user churn.

Run with ``python notebooks/04_simulation_trends.py``. Five seeds per point
keep it quick; the acceptance suite uses twenty.
"""

from dibrcast.simulator import ScenarioConfig, confidence_interval, run_scenario

base = ScenarioConfig(simulate_reception=False)
SEEDS = range(5)


def point(**changes):
    runs = [run_scenario(base.replace(seed=s, **changes)) for s in SEEDS]
    mv = confidence_interval([r.mean_mvgmp_channel_time for r in runs])
    bl = confidence_interval([r.mean_baseline_channel_time for r in runs])
    return mv, bl


def line(label, mv, bl):
    print(f"  {label:14s} MVGMP {mv[0]:6.2f} +/- {mv[1]:.2f} ms   baseline {bl[0]:6.2f} +/- {bl[1]:.2f} ms   ratio {mv[0] / bl[0]:.2f}")


print("synthesis range R")
for R in (1, 2, 3, 4, 5):
    line(f"R={R}", *point(quality=R))
print("number of views M")
for M in (8, 16, 24):
    line(f"M={M}", *point(views=M))
print("arrival rate (departure 0.3)")
for lam in (0.1, 0.2, 0.3):
    line(f"arrival={lam}", *point(arrival=lam))
print("view preference")
for pref in ("uniform", "zipf", "normal"):
    line(pref, *point(preference=pref))
