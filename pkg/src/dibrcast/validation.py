"""Closed forms checked against the oracles, as rows of a validation report.

Every function returns :class:`~dibrcast.oracle.ValidationRow` objects. Rows
with a tolerance pass or fail; rows without one (the alternative
periodic Zipf forms) are reported only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .analysis import (
    PeriodicZipfParams,
    asymptotic_alpha,
    asymptotic_alpha_periodic_zipf,
    asymptotic_alpha_periodic_zipf_printed,
    asymptotic_alpha_spaced,
    expected_alpha,
    view_failure_probability,
    view_failure_probability_single_radio,
)
from .config import AnalysisSettings
from .model import Client, ExplicitLossModel, TransmissionPlan
from .oracle import (
    PeriodicZipfSubscription,
    SpacedTransmission,
    UniformSubscription,
    ValidationRow,
    enumerate_failure_probability,
    make_rng,
    monte_carlo_alpha,
    simulate_view_sequence_alpha,
)

#: Loss probabilities drawn for random plan instances.
LOSS_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
#: Two channels and two rates for random plan instances.
GRID_CHANNELS = (1, 2)
GRID_RATES = (6.5, 13.0)

ENUMERATION_TOLERANCE = 1e-12
SEQUENCE_TOLERANCE = 5e-3
MC_SIGMAS = 4.0


@dataclass(frozen=True)
class PlanInstance:
    """A client, its per-(channel, rate) losses and a transmission plan."""

    client: Client
    model: ExplicitLossModel
    plan: TransmissionPlan
    M: int

    def label(self) -> str:
        losses = ",".join(f"{ch}/{r:g}={p:g}" for (_, ch, r), p in sorted(self.model.table.items()))
        plan = ",".join(f"{s.view}@{s.channel}/{s.rate:g}x{n}" for s, n in sorted(self.plan.items()))
        return f"M={self.M} loss[{losses}] plan[{plan}]"


def random_plan_instance(
    rng: np.random.Generator,
    M: int,
    max_transmissions: int = 8,
    channels: Sequence[int] = GRID_CHANNELS,
    rates: Sequence[float] = GRID_RATES,
    losses: Sequence[float] = LOSS_GRID,
    desired_views: int = 1,
) -> PlanInstance:
    """Random plan with at most ``max_transmissions`` transmissions of views ``1..M``."""
    table = {(0, ch, r): float(rng.choice(losses)) for ch in channels for r in rates}
    counts: dict[tuple, int] = {}
    for _ in range(int(rng.integers(0, max_transmissions + 1))):
        key = (int(rng.integers(1, M + 1)), int(rng.choice(channels)), float(rng.choice(rates)))
        counts[key] = counts.get(key, 0) + 1
    k = min(desired_views, M)
    desired = frozenset(int(v) for v in rng.choice(np.arange(1, M + 1), size=k, replace=False))
    client = Client(0, frozenset(channels), frozenset(rates), desired)
    return PlanInstance(client, ExplicitLossModel(table), TransmissionPlan(counts), M)


def plan_grid(
    seed: int, per_cell: int, Ms: Sequence[int] = range(2, 7), Rs: Sequence[int] = (1, 2, 3)
) -> Iterator[tuple[PlanInstance, int]]:
    """``per_cell`` random plans for every ``(M, R)``; yields ``(instance, R)``."""
    rng = make_rng(seed)
    for M, R in itertools.product(Ms, Rs):
        for _ in range(per_cell):
            yield random_plan_instance(rng, M), R


def enumeration_rows(instances: Sequence[tuple[PlanInstance, int]]) -> list[ValidationRow]:
    """Failure probability of every desired view vs. exhaustive enumeration."""
    rows = []
    for inst, R in instances:
        for d in range(1, inst.M + 1):
            closed = view_failure_probability(inst.client, d, inst.plan, inst.model, inst.M, R)
            exact = enumerate_failure_probability(inst.client, d, inst.plan, inst.model, inst.M, R)
            rows.append(ValidationRow(f"{inst.label()} R={R} k={d}", closed, exact, 0.0, ENUMERATION_TOLERANCE, "enumeration"))
    return rows


def single_radio_rows(instances: Sequence[tuple[PlanInstance, int]]) -> list[ValidationRow]:
    """Radio fixed to one channel: closed form vs. enumeration of a one-channel client."""
    rows = []
    for inst, R in instances:
        for ch in sorted(inst.client.channels):
            tuned = Client(inst.client.id, frozenset({ch}), inst.client.rates, inst.client.desired_views)
            for d in range(1, inst.M + 1):
                closed = view_failure_probability_single_radio(inst.client, ch, d, inst.plan, inst.model, inst.M, R)
                exact = enumerate_failure_probability(tuned, d, inst.plan, inst.model, inst.M, R)
                rows.append(
                    ValidationRow(f"{inst.label()} R={R} k={d} ch={ch}", closed, exact, 0.0, ENUMERATION_TOLERANCE, "single-radio")
                )
    return rows


def expected_alpha_rows(seed: int, instances: int, trials: int) -> list[ValidationRow]:
    """Mean success over several desired views vs. Monte Carlo reception."""
    rng = make_rng(seed)
    rows = []
    for i in range(instances):
        M = int(rng.integers(3, 9))
        R = int(rng.integers(1, 4))
        inst = random_plan_instance(rng, M, max_transmissions=12, desired_views=int(rng.integers(1, M + 1)))
        closed = expected_alpha(inst.client, inst.plan, inst.model, M, R)
        est = monte_carlo_alpha(inst.client, inst.plan, inst.model, M, R, trials, rng.spawn(1)[0])
        views = ",".join(map(str, sorted(inst.client.desired_views)))
        rows.append(
            ValidationRow(
                f"#{i} {inst.label()} R={R} K={{{views}}}",
                closed,
                est.mean,
                est.half_width,
                MC_SIGMAS * est.std_error + 1e-12,
                "monte-carlo",
            )
        )
    return rows


def sequence_rows(
    losses: Sequence[float], Rs: Sequence[int], p_select: float, length: int, seed: int
) -> list[ValidationRow]:
    """Long-run acquisition ratio with every view multicast vs. simulation."""
    rng = make_rng(seed)
    rows = []
    for p in losses:
        for R in Rs:
            est = simulate_view_sequence_alpha(R, UniformSubscription(p_select), length, rng.spawn(1)[0], p_loss=p)
            rows.append(
                ValidationRow(f"p={p:g} R={R}", asymptotic_alpha(p, R), est.mean, est.half_width, SEQUENCE_TOLERANCE, "sequence")
            )
        rows.append(ValidationRow(f"p={p:g} R=1 vs 1-p", asymptotic_alpha(p, 1), 1.0 - p, 0.0, ENUMERATION_TOLERANCE, "exact"))
    return rows


def spaced_rows(
    losses: Sequence[float], Rs: Sequence[int], spacings: Sequence[int], p_select: float, length: int, seed: int
) -> list[ValidationRow]:
    """One view in every ``R_tilde`` multicast: closed form vs. simulation."""
    rng = make_rng(seed)
    rows = []
    for p in losses:
        for R in Rs:
            rows.append(
                ValidationRow(
                    f"p={p:g} R={R} R_tilde=1 vs all views",
                    asymptotic_alpha_spaced(p, R, 1),
                    asymptotic_alpha(p, R),
                    0.0,
                    ENUMERATION_TOLERANCE,
                    "exact",
                )
            )
            for Rt in spacings:
                if not 1 < Rt <= R:
                    continue
                est = simulate_view_sequence_alpha(
                    R, SpacedTransmission(Rt, p_select), length, rng.spawn(1)[0], p_loss=p
                )
                rows.append(
                    ValidationRow(
                        f"p={p:g} R={R} R_tilde={Rt}",
                        asymptotic_alpha_spaced(p, R, Rt),
                        est.mean,
                        est.half_width,
                        SEQUENCE_TOLERANCE,
                        "spaced",
                    )
                )
    return rows


def zipf_rows(
    cases: Sequence[tuple[int, float, float]], Rs: Sequence[int], peak: float, length: int, seed: int
) -> list[ValidationRow]:
    """Periodic Zipf subscription: cyclic formula vs. simulation.

    Two report-only rows follow each check: the same chain without the
    reward of gaps longer than ``R``, and the literal piecewise expression.
    """
    rng = make_rng(seed)
    rows = []
    for m, s, p in cases:
        params = PeriodicZipfParams.with_peak(m, s, p, peak)
        for R in Rs:
            est = simulate_view_sequence_alpha(
                R, PeriodicZipfSubscription(m, s, params.c), length, rng.spawn(1)[0], p_loss=1.0 - p
            )
            label = f"m={m} s={s:g} p={p:g} c={params.c:g} R={R}"
            rows.append(
                ValidationRow(label, asymptotic_alpha_periodic_zipf(params, R), est.mean, est.half_width, SEQUENCE_TOLERANCE, "zipf")
            )
            rows.append(
                ValidationRow(
                    label + " without long-gap reward",
                    asymptotic_alpha_periodic_zipf(params, R, tail=False),
                    est.mean,
                    est.half_width,
                    None,
                    "zipf-truncated",
                )
            )
            rows.append(
                ValidationRow(
                    label + " printed form",
                    asymptotic_alpha_periodic_zipf_printed(params, R),
                    est.mean,
                    est.half_width,
                    None,
                    "zipf-printed",
                )
            )
    return rows


def full_suite(settings: AnalysisSettings) -> list[ValidationRow]:
    """Every check ``validate`` runs, in report order."""
    seed = settings.seed
    per_cell = max(1, settings.enumeration_instances // 15)
    grid = list(plan_grid(seed, per_cell))
    rows = enumeration_rows(grid)
    rows += single_radio_rows(grid)
    rows += expected_alpha_rows(seed + 1, settings.mc_instances, settings.mc_trials)
    length = settings.sequence_length
    rows += sequence_rows(settings.loss_grid, settings.quality_grid, settings.p_select, length, seed + 2)
    rows += spaced_rows(
        settings.loss_grid, settings.quality_grid, settings.spacing_grid, settings.p_select, length, seed + 3
    )
    rows += zipf_rows(settings.zipf, settings.quality_grid, settings.zipf_peak, length, seed + 4)
    return rows
