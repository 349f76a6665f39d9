"""Closed-form reliability of DIBR-protected multi-view multicast.

Walks through the failure probability of a single desired view, how it falls
when neighbours are received too, and the long-run acquisition ratio.

Run with ``python notebooks/01_reliability_analysis.py``.
"""

from dibrcast.analysis import (
    PeriodicZipfParams,
    alpha_without_dibr,
    asymptotic_alpha,
    asymptotic_alpha_periodic_zipf,
    asymptotic_alpha_spaced,
    failure_from_view_losses,
    view_failure_probability,
)
from dibrcast.model import Client, ExplicitLossModel, TransmissionPlan

# A client on one channel at 6.5 Mbps wants view 3 of M = 5 views.
client = Client(1, frozenset({1}), frozenset({6.5}), frozenset({3}), threshold=0.05)
model = ExplicitLossModel({(1, 1, 6.5): 0.3})

print("failure of view 3 with R = 2 (each view lost with probability 0.3)")
for name, counts in [
    ("only view 3", {(3, 1, 6.5): 1}),
    ("view 3 twice", {(3, 1, 6.5): 2}),
    ("views 2, 3, 4", {(2, 1, 6.5): 1, (3, 1, 6.5): 1, (4, 1, 6.5): 1}),
    ("views 2..4, view 3 twice", {(2, 1, 6.5): 1, (3, 1, 6.5): 2, (4, 1, 6.5): 1}),
]:
    f = view_failure_probability(client, 3, TransmissionPlan(counts), model, 5, 2)
    print(f"  {name:28s} {f:.4f}  (threshold {client.threshold})")

# The same numbers straight from per-view losses; boundary views get no synthesis.
print("\nper-view losses 0.3 for views 1..5 (index 0 unused), R = 3:")
for k in range(1, 6):
    print(f"  desired view {k}: {failure_from_view_losses([1.0] + [0.3] * 5, k, 5, 3):.4f}")

print("\nlong-run acquisition ratio, every view multicast")
print("  p     no DIBR  R=2     R=3     R=4")
for p in (0.1, 0.3, 0.5):
    row = "  ".join(f"{asymptotic_alpha(p, R):.4f}" for R in (2, 3, 4))
    print(f"  {p:.1f}   {alpha_without_dibr(p):.4f}   {row}")

print("\nonly every R_tilde-th view sent (p = 0.2, R = 3)")
for rt in (1, 2, 3):
    print(f"  R_tilde={rt}: {asymptotic_alpha_spaced(0.2, 3, rt):.4f}")

print("\nperiodic Zipf subscription, peak probability 0.9, R = 3")
for m, s, p in [(3, 1.0, 0.5), (5, 1.0, 0.6)]:
    params = PeriodicZipfParams.with_peak(m, s, p, 0.9)
    print(f"  m={m} s={s:g} success={p}: {asymptotic_alpha_periodic_zipf(params, 3):.4f}")
