"""Cross-checking the closed forms against brute force and simulation.

Run with ``python notebooks/02_oracle_validation.py``. The full suite with
the acceptance tolerances is ``dibrcast validate``; this script uses
smaller sample sizes so it finishes in a few seconds.
"""

from collections import defaultdict

from dibrcast.oracle import make_rng
from dibrcast.validation import (
    enumeration_rows,
    expected_alpha_rows,
    plan_grid,
    sequence_rows,
    zipf_rows,
)

grid = list(plan_grid(seed=7, per_cell=20))
rows = enumeration_rows(grid)
print(f"exhaustive enumeration: {len(rows)} (plan, R, view) cases, largest gap {max(r.delta for r in rows):.1e}")

for r in expected_alpha_rows(seed=8, instances=3, trials=200_000):
    print(f"Monte Carlo expected alpha: closed {r.closed_form:.4f} vs sampled {r.oracle:.4f} +/- {r.ci:.4f}")

for r in sequence_rows((0.3,), (1, 2, 3), 0.8, 200_000, seed=9):
    if r.kind == "sequence":
        print(f"view sequence {r.instance}: closed {r.closed_form:.4f} vs simulated {r.oracle:.4f}")

by_kind = defaultdict(list)
for r in zipf_rows([(3, 1.0, 0.5)], (3,), 0.9, 200_000, seed=10):
    by_kind[r.kind].append(r)
for kind, items in by_kind.items():
    for r in items:
        print(f"{kind:15s} value {r.closed_form:.4f}, simulation {r.oracle:.4f}, gap {r.delta:.4f}")

make_rng(0)  # every engine takes a seed; identical seeds replay identical draws
