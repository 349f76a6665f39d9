"""Ground-truth engines used to check the closed forms.

Nothing here calls into :mod:`dibrcast.analysis`: the enumeration works on
individual transmissions and the Monte Carlo engines draw every transmission,
so an error in a closed form cannot leak into its own check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import (
    ApTransmissionPolicy,
    Client,
    DomainError,
    LossModel,
    TransmissionPlan,
    check_views,
    loss_probability,
)

ENUMERATION_CAP = 24


class OutcomeSpaceTooLarge(RuntimeError):
    pass


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    """Seeded generator; children come from ``rng.spawn``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.default_rng(seed)


def _instances(client: Client, plan: TransmissionPlan, model: LossModel) -> list[tuple[int, float]]:
    out = []
    for slot, n in plan.items():
        if client.can_decode(slot.channel, slot.rate):
            p = loss_probability(model, client, slot.channel, slot.rate)
            out.extend([(slot.view, p)] * n)
    return out


def _fails(received: set[int], desired: int, M: int, R: int) -> bool:
    if desired in received:
        return False
    if desired == 1 or desired == M:
        return True
    lefts = [a for a in received if a < desired]
    rights = [b for b in received if b > desired]
    return not any(b - a <= R for a in lefts for b in rights)


def enumerate_failure_probability(
    client: Client,
    desired: int,
    plan: TransmissionPlan,
    model: LossModel,
    M: int,
    R: int,
    cap: int = ENUMERATION_CAP,
) -> float:
    """Exact failure probability by summing over every loss outcome.

    Each transmission the client can decode is an independent coin; an
    outcome is a bitmask over those coins (bit set = received).
    """
    check_views(M, R)
    if not 1 <= desired <= M:
        raise DomainError(f"desired view {desired} outside 1..{M}")
    inst = _instances(client, plan, model)
    T = len(inst)
    if T > cap:
        raise OutcomeSpaceTooLarge(f"{T} transmissions -> 2**{T} outcomes exceeds cap 2**{cap}")

    terms = []
    for mask in range(1 << T):
        prob = 1.0
        received = set()
        for t, (view, p) in enumerate(inst):
            if mask >> t & 1:
                prob *= 1.0 - p
                received.add(view)
            else:
                prob *= p
            if prob == 0.0:
                break
        if prob and _fails(received, desired, M, R):
            terms.append(prob)
    return math.fsum(terms)


def simulate_reception(plan: TransmissionPlan, client: Client, model: LossModel, rng: np.random.Generator) -> set[int]:
    """Views the client receives at least once in one realisation of ``plan``."""
    received = set()
    for slot, n in plan.items():
        if not client.can_decode(slot.channel, slot.rate):
            continue
        p = loss_probability(model, client, slot.channel, slot.rate)
        if (rng.random(n) >= p).any():
            received.add(slot.view)
    return received


def recoverable_views(received: Iterable[int], M: int, R: int) -> set[int]:
    """Received views plus every view DIBR can synthesize from them.

    One left-to-right sweep: a gap between consecutive received views ``a < b``
    is filled when ``b - a <= R``.
    """
    got = sorted(v for v in set(received) if 1 <= v <= M)
    out = set(got)
    for a, b in zip(got, got[1:]):
        if b - a <= R:
            out.update(range(a + 1, b))
    return out


def recoverable_mask(received: np.ndarray, R: int) -> np.ndarray:
    """Vectorised DIBR closure along the last axis of a boolean array."""
    n = received.shape[-1]
    idx = np.arange(n)
    prev = np.maximum.accumulate(np.where(received, idx, -(n + R + 2)), axis=-1)
    nxt = np.minimum.accumulate(np.where(received, idx, 2 * n + R + 2)[..., ::-1], axis=-1)[..., ::-1]
    return received | (nxt - prev <= R)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    trials: int

    @property
    def half_width(self) -> float:
        """95% confidence half-width."""
        return 1.96 * self.std_error

    def within(self, value: float, sigmas: float = 4.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.std_error + 1e-12


def _received_matrix(
    client: Client,
    source: TransmissionPlan | ApTransmissionPolicy,
    model: LossModel,
    M: int,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    received = np.zeros((trials, M), dtype=bool)
    if isinstance(source, TransmissionPlan):
        for slot, n in source.items():
            if slot.view > M or not client.can_decode(slot.channel, slot.rate):
                continue
            p = loss_probability(model, client, slot.channel, slot.rate)
            received[:, slot.view - 1] |= (rng.random((trials, n)) >= p).any(axis=1)
        return received
    for (ch, rate), dist in sorted(source.distributions.items()):
        if not client.can_decode(ch, rate):
            continue
        p = loss_probability(model, client, ch, rate)
        nmax = len(dist) - 1
        if nmax == 0:
            continue
        n = rng.choice(nmax + 1, size=(trials, M), p=np.asarray(dist))
        ok = (rng.random((trials, M, nmax)) >= p) & (np.arange(nmax) < n[..., None])
        received |= ok.any(axis=2)
    return received


def monte_carlo_alpha(
    client: Client,
    source: TransmissionPlan | ApTransmissionPolicy,
    model: LossModel,
    M: int,
    R: int,
    trials: int,
    rng: np.random.Generator,
    batch: int = 200_000,
) -> MonteCarloEstimate:
    """Estimate the mean fraction of desired views obtained per frame.

    Trials run in batches with independent child generators.
    """
    check_views(M, R)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    desired = np.array(sorted(client.desired_views)) - 1
    if desired.size == 0:
        raise DomainError(f"client {client.id} has no desired views")
    n_batches = -(-trials // batch)
    children = rng.spawn(n_batches)
    total = 0.0
    total_sq = 0.0
    done = 0
    for child in children:
        size = min(batch, trials - done)
        got = recoverable_mask(_received_matrix(client, source, model, M, size, child), R)
        alpha = got[:, desired].mean(axis=1)
        total += float(alpha.sum())
        total_sq += float((alpha**2).sum())
        done += size
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    se = math.sqrt(var / trials) if trials > 1 else 0.0
    return MonteCarloEstimate(mean, se, trials)


def failure_frequency(
    client: Client,
    desired: int,
    plan: TransmissionPlan,
    model: LossModel,
    M: int,
    R: int,
    trials: int,
    rng: np.random.Generator,
) -> MonteCarloEstimate:
    """Empirical failure frequency of one desired view."""
    from dataclasses import replace

    est = monte_carlo_alpha(replace(client, desired_views=frozenset({desired})), plan, model, M, R, trials, rng)
    return MonteCarloEstimate(1.0 - est.mean, est.std_error, trials)


# --------------------------------------------------------------------------
# Long view sequences
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformSubscription:
    p_select: float = 0.8


@dataclass(frozen=True)
class PeriodicZipfSubscription:
    """View ``k`` subscribed w.p. ``c / pos(k)**s``, ``pos(k) = (k-1) % m + 1``."""

    m: int
    s: float
    c: float


@dataclass(frozen=True)
class SpacedTransmission:
    """Only one view in every ``R_tilde`` is multicast; uniform subscription."""

    R_tilde: int
    p_select: float = 0.8


Subscription = UniformSubscription | PeriodicZipfSubscription | SpacedTransmission


def _sequence_reception(
    M: int,
    rng: np.random.Generator,
    p_loss: float | None,
    policy: ApTransmissionPolicy | None,
    client: Client | None,
    model: LossModel | None,
) -> np.ndarray:
    if policy is None:
        if p_loss is None:
            raise DomainError("need either p_loss or a policy")
        return rng.random(M) >= p_loss
    if client is None or model is None:
        raise DomainError("a policy needs the client and loss model")
    return _received_matrix(client, policy, model, M, 1, rng)[0]


def simulate_view_sequence_alpha(
    R: int,
    subscription: Subscription,
    M_large: int,
    rng: np.random.Generator,
    p_loss: float | None = None,
    policy: ApTransmissionPolicy | None = None,
    client: Client | None = None,
    model: LossModel | None = None,
    batches: int = 50,
) -> MonteCarloEstimate:
    """Acquired/subscribed ratio over one long run of views.

    Reception is either i.i.d. with loss ``p_loss`` per view or drawn per
    transmission from an AP repeat-count ``policy``. The standard error comes
    from batch means over ``batches`` contiguous blocks.
    """
    if M_large < 100_000:
        raise DomainError("sequence simulation needs M_large >= 1e5")
    if R < 1:
        raise DomainError("R must be >= 1")
    received = _sequence_reception(M_large, rng, p_loss, policy, client, model)
    idx = np.arange(M_large)
    if isinstance(subscription, SpacedTransmission):
        if subscription.R_tilde < 1:
            raise DomainError("R_tilde must be >= 1")
        received &= idx % subscription.R_tilde == 0
        subscribed = rng.random(M_large) < subscription.p_select
    elif isinstance(subscription, PeriodicZipfSubscription):
        pos = idx % subscription.m + 1
        subscribed = rng.random(M_large) < subscription.c / pos.astype(float) ** subscription.s
    else:
        subscribed = rng.random(M_large) < subscription.p_select
    acquired = recoverable_mask(received, R) & subscribed

    total_sub = int(subscribed.sum())
    if total_sub == 0:
        return MonteCarloEstimate(0.0, 0.0, 0)
    alpha = acquired.sum() / total_sub
    blocks = np.array_split(np.arange(M_large), batches)
    ratios = []
    for b in blocks:
        s = subscribed[b].sum()
        if s:
            ratios.append(acquired[b].sum() / s)
    se = float(np.std(ratios, ddof=1) / math.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
    return MonteCarloEstimate(float(alpha), se, total_sub)


# --------------------------------------------------------------------------
# Validation report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationRow:
    instance: str
    closed_form: float
    oracle: float
    ci: float
    tolerance: float | None
    kind: str

    @property
    def delta(self) -> float:
        return abs(self.closed_form - self.oracle)

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.delta <= self.tolerance


REPORT_COLUMNS = ("instance", "kind", "closed_form", "oracle", "abs_delta", "ci", "tolerance", "passed")


def write_report(rows: Sequence[ValidationRow], path, header: str | None = None) -> None:
    """CSV with one row per check; ``tolerance`` is empty for report-only rows."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([
                r.instance,
                r.kind,
                f"{r.closed_form:.15g}",
                f"{r.oracle:.15g}",
                f"{r.delta:.3e}",
                f"{r.ci:.3e}",
                "" if r.tolerance is None else f"{r.tolerance:.3e}",
                "report" if r.tolerance is None else ("pass" if r.passed else "FAIL"),
            ])
