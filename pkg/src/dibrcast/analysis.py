"""Closed-form reliability of DIBR-protected multi-view multicast.

Two conventions coexist and are kept apart by name:

* ``loss`` values (``p_i``, ``p_{i,c,r}``) are probabilities of NOT receiving.
* :class:`PeriodicZipfParams.p` is a probability of SUCCESS, as used by the
  periodic Zipf subscription result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    ApTransmissionPolicy,
    Client,
    ConfigurationError,
    DomainError,
    LossModel,
    TransmissionPlan,
    check_views,
    loss_probability,
)

_TINY = 1e-6
_SLACK = 1e-12


def _clamp(value: float) -> float:
    if value < -_SLACK or value > 1.0 + _SLACK:
        raise ArithmeticError(f"probability escaped [0, 1]: {value!r}")
    return min(1.0, max(0.0, value))


def _product(factors: Sequence[float]) -> float:
    # log-space once a factor is tiny; many tiny factors would underflow
    if any(f == 0.0 for f in factors):
        return 0.0
    if any(f < _TINY for f in factors):
        return math.exp(math.fsum(math.log(f) for f in factors))
    return math.prod(factors)


def view_loss_probability(client: Client, view: int, plan: TransmissionPlan, model: LossModel) -> float:
    """Probability that ``client`` receives none of the transmissions of ``view``.

    Slots outside the client's channels/rates cannot be received and
    contribute nothing; a view that is never sent is lost with certainty.
    """
    factors = []
    for slot, n in plan.for_view(view):
        if client.can_decode(slot.channel, slot.rate):
            p = loss_probability(model, client, slot.channel, slot.rate)
            factors.extend([p] * n)
    return _product(factors)


def failure_from_view_losses(losses: Sequence[float], desired: int, M: int, R: int) -> float:
    """View failure probability from per-view loss probabilities.

    ``losses[v]`` is the loss probability of view ``v`` (index 0 unused). The
    failure event is split by the nearest received left view: it sits ``k``
    views to the left (``1 <= k <= R-1``) with every right view within the
    remaining distance lost, or no left view within ``R-1`` is received.
    Boundary views cannot be synthesized.
    """
    check_views(M, R)
    if not 1 <= desired <= M:
        raise DomainError(f"desired view {desired} outside 1..{M}")
    if len(losses) < M + 1:
        raise DomainError(f"need losses[0..{M}] (index 0 unused), got {len(losses)} values")
    if desired == 1 or desired == M:
        return _clamp(losses[desired])

    total = 0.0
    for k in range(1, R):
        if desired < k + 1:
            break
        left_received = 1.0 - losses[desired - k]
        if left_received == 0.0:
            continue
        inner = [losses[desired - q] for q in range(k)]
        right = [losses[desired + l] for l in range(1, min(R - k, M - desired) + 1)]
        total += left_received * _product(inner + right)
    no_left = [losses[desired - q] for q in range(min(R - 1, desired - 1) + 1)]
    total += _product(no_left)
    return _clamp(total)


def _view_losses(client: Client, plan: TransmissionPlan, model: LossModel, M: int) -> list[float]:
    losses = [1.0] * (M + 1)
    for v in range(1, M + 1):
        losses[v] = view_loss_probability(client, v, plan, model)
    return losses


def view_failure_probability(
    client: Client, desired: int, plan: TransmissionPlan, model: LossModel, M: int, R: int
) -> float:
    """Probability that ``client`` can neither receive nor synthesize ``desired``.

    Parameters
    ----------
    client : Client
        Receiver; only slots on its channels and rates count.
    desired : int
        Desired view ``k_i`` in ``1..M``.
    plan : TransmissionPlan
        Transmissions the client listens to.
    model : LossModel
        Source of per-transmission loss probabilities.
    M, R : int
        Number of views and the DIBR quality constraint (left and right
        reference views at most ``R`` apart).
    """
    check_views(M, R)
    if not 1 <= desired <= M:
        raise DomainError(f"desired view {desired} outside 1..{M}")
    return failure_from_view_losses(_view_losses(client, plan, model, M), desired, M, R)


def view_failure_probability_single_radio(
    client: Client, fixed_channel: int, desired: int, plan: TransmissionPlan, model: LossModel, M: int, R: int
) -> float:
    """As :func:`view_failure_probability` for a radio tuned to one channel."""
    if fixed_channel not in client.channels:
        raise DomainError(f"channel {fixed_channel} not available to client {client.id}")
    return view_failure_probability(client, desired, plan.restricted_to_channel(fixed_channel), model, M, R)


def expected_alpha(client: Client, plan: TransmissionPlan, model: LossModel, M: int, R: int) -> float:
    """Expected fraction of the client's desired views it can obtain."""
    if not client.desired_views:
        raise DomainError(f"client {client.id} has no desired views")
    losses = _view_losses(client, plan, model, M)
    terms = [1.0 - failure_from_view_losses(losses, k, M, R) for k in sorted(client.desired_views)]
    return _clamp(math.fsum(terms) / len(terms))


def aggregate_loss_probability(client: Client, policy: ApTransmissionPolicy, model: LossModel) -> float:
    """Loss probability of a view under a random repeat-count policy.

    Per (channel, rate) the loss is ``sum_n P(n) * p**n``; the view is lost if
    it is lost on every pair the client can decode.
    """
    factors = []
    for ch in sorted(client.channels):
        for rate in sorted(client.rates):
            dist = policy.distribution(ch, rate)
            p = loss_probability(model, client, ch, rate)
            factors.append(math.fsum(w * p**n for n, w in enumerate(dist) if w))
    return _clamp(_product(factors))


def _check_loss(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")


def asymptotic_alpha(p: float, R: int) -> float:
    """Long-run acquisition ratio with every view multicast, loss ``p`` per view.

    A cycle runs between consecutive received views; a gap of length ``k <= R``
    yields all ``k`` views, a longer gap only its closing view.
    """
    _check_loss(p)
    if R < 1:
        raise DomainError("R must be >= 1")
    q = 1.0 - p
    bracket = math.fsum(k * q * p ** (k - 1) for k in range(1, R + 1)) + p**R
    return _clamp(q * bracket)


def asymptotic_alpha_spaced(p: float, R: int, R_tilde: int) -> float:
    """Acquisition ratio when only one view in every ``R_tilde`` is multicast."""
    _check_loss(p)
    if R_tilde < 1 or R_tilde > R:
        raise DomainError(f"need 1 <= R_tilde <= R, got R_tilde={R_tilde}, R={R}")
    q = 1.0 - p
    hops = R // R_tilde
    bracket = math.fsum(R_tilde * k * q * p ** (k - 1) for k in range(1, hops + 1)) + p**hops
    return _clamp(q * bracket / R_tilde)


# --------------------------------------------------------------------------
# Periodic Zipf subscription
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicZipfParams:
    """View ``k`` is subscribed with probability ``c / pos(k)**s``.

    ``pos(k) = ((k - 1) mod m) + 1`` is the position of the view within its
    period. ``p`` is the per-view SUCCESS probability.
    """

    m: int
    s: float
    c: float
    p: float

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("period m must be >= 1")
        if self.s < 0:
            raise ConfigurationError("Zipf exponent must be >= 0")
        if self.c <= 0:
            raise ConfigurationError("normalization constant must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError("success probability must lie in [0, 1]")
        if max(self.weights()) > 1.0 + 1e-12:
            raise ConfigurationError("subscription probability exceeds 1")

    @classmethod
    def with_peak(cls, m: int, s: float, p: float, peak: float = 0.9) -> "PeriodicZipfParams":
        """Choose ``c`` so that the most popular position is subscribed w.p. ``peak``."""
        return cls(m, s, peak, p)

    def weights(self) -> list[float]:
        """Subscription probability of positions ``1..m`` (list index 0 is position 1)."""
        return [self.c / pos**self.s for pos in range(1, self.m + 1)]

    def subscription_probability(self, position: int) -> float:
        pos = (position - 1) % self.m + 1
        return self.c / pos**self.s


def periodic_zipf_transition_matrix(p: float, m: int) -> np.ndarray:
    """Transition matrix of the period position of successive received views.

    Entry ``[i-1, j-1]`` is the probability that the next received view after
    one at position ``i`` sits at position ``j``.
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"success probability must lie in (0, 1], got {p}")
    if m < 1:
        raise DomainError("m must be >= 1")
    q = 1.0 - p
    norm = 1.0 - q**m
    P = np.empty((m, m))
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            steps = j - i if i < j else m - i + j
            P[i - 1, j - 1] = p * q ** (steps - 1) / norm
    return P


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary distribution of an irreducible stochastic matrix."""
    m = P.shape[0]
    A = np.vstack([P.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def expected_subscribed(j: int, x: int, params: PeriodicZipfParams) -> float:
    """Expected number of subscribed views among the ``x`` positions after ``j``."""
    w = params.weights()
    m = params.m
    full, rest = divmod(x, m)
    start = j % m  # list index of position j+1
    partial = math.fsum(w[(start + t) % m] for t in range(rest))
    return full * math.fsum(w) + partial


def _check_position(j: int, params: PeriodicZipfParams) -> None:
    if not 1 <= j <= params.m:
        raise DomainError(f"position {j} outside 1..{params.m}")


def periodic_zipf_cycle_reward(j: int, params: PeriodicZipfParams, R: int) -> float:
    """Expected subscribed views gained from short gaps after a reception at ``j``.

    Sums, over gap lengths ``x <= R``, the expected number of subscribed views
    among the ``x`` positions following ``j`` weighted by the gap law
    ``p (1-p)**(x-1)``. Longer gaps earn nothing here; see
    :func:`periodic_zipf_tail_reward`.
    """
    _check_position(j, params)
    p = params.p
    return math.fsum(expected_subscribed(j, x, params) * p * (1 - p) ** (x - 1) for x in range(1, R + 1))


def periodic_zipf_tail_reward(j: int, params: PeriodicZipfParams, R: int) -> float:
    """Expected reward of gaps longer than ``R`` after a reception at ``j``.

    Such a gap cannot be bridged by synthesis, but its closing view is received
    and counts if subscribed. The geometric tail is summed in closed form over
    one period.
    """
    _check_position(j, params)
    p = params.p
    if p == 0.0:
        return 0.0
    q = 1.0 - p
    m = params.m
    one_period = math.fsum(
        params.subscription_probability(j + x) * p * q ** (x - 1) for x in range(R + 1, R + m + 1)
    )
    return one_period / (1.0 - q**m)


def asymptotic_alpha_periodic_zipf(params: PeriodicZipfParams, R: int, tail: bool = True) -> float:
    """Long-run acquisition ratio under periodic Zipf subscription.

    Markov renewal-reward argument: receptions occur at rate ``p`` per view, the
    period position of successive receptions is a Markov chain (uniform
    stationary law) and each cycle earns the subscribed views it delivers.

    With ``tail=False`` gaps longer than ``R`` earn nothing, not even their
    received closing view; that variant undercounts and is kept for reporting.
    """
    if R < 1:
        raise DomainError("R must be >= 1")
    if params.p == 0.0:
        return 0.0
    pi = stationary_distribution(periodic_zipf_transition_matrix(params.p, params.m))
    per_cycle = math.fsum(
        pi[j - 1] * (periodic_zipf_cycle_reward(j, params, R) + (periodic_zipf_tail_reward(j, params, R) if tail else 0.0))
        for j in range(1, params.m + 1)
    )
    subscribed_per_view = math.fsum(params.weights()) / params.m
    return _clamp(params.p * per_cycle / subscribed_per_view)


def asymptotic_alpha_periodic_zipf_printed(params: PeriodicZipfParams, R: int) -> float:
    """Literal evaluation of the piecewise periodic Zipf expression.

    Kept only to report how far it sits from simulation. The middle term uses
    real division ``(x-(m-j))/m`` and the last sum runs to
    ``(x-(m-j)) mod m`` with a non-negative modulus, exactly as written, for
    every ``x`` (the expression is not defined for ``x < m-j``). Gaps longer
    than ``R`` earn nothing.
    """
    if R < 1:
        raise DomainError("R must be >= 1")
    p, m, c, s = params.p, params.m, params.c, params.s
    total_weight = math.fsum(c / t**s for t in range(1, m + 1))
    acc = []
    for j in range(1, m + 1):
        for x in range(1, R + 1):
            head = math.fsum(c / (j + l) ** s for l in range(1, m - j + 1))
            middle = total_weight * (x - (m - j)) / m
            tail = math.fsum(c / l**s for l in range(1, (x - (m - j)) % m + 1))
            acc.append((head + middle + tail) * p * (1 - p) ** (x - 1))
    return p * math.fsum(acc) / total_weight


def alpha_without_dibr(p: float) -> float:
    """Acquisition ratio when views can only be received directly."""
    _check_loss(p)
    return 1.0 - p

