"""Core domain types: clients, cells, loss models and transmission plans.

Views are numbered ``1..M``. Channels are numbered ``1..n_channels`` and PHY
rates are expressed in Mbps. A loss probability is always the probability
that ONE transmission of a view is not received by a given client.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

#: 802.11n single-stream MCS rates (20 MHz, long GI), in Mbps.
DEFAULT_RATES: tuple[float, ...] = (6.5, 13.0, 19.5, 26.0, 39.0, 52.0, 58.5, 65.0)
DEFAULT_CHANNELS = 13
#: Per-view video rate (texture 600 kbps + depth 200 kbps), bits/s.
DEFAULT_VIDEO_RATE = 800e3
#: 30 frames per second.
DEFAULT_FRAME_INTERVAL = 0.0333
#: Invented per-rate loss at the reference distance, one entry per default rate.
DEFAULT_BASE_LOSS = (0.02, 0.03, 0.05, 0.08, 0.12, 0.18, 0.22, 0.26)
#: Default cell radius in metres; also the reference distance of the default loss model.
DEFAULT_CELL_RADIUS = 50.0


class ConfigurationError(ValueError):
    """Raised for malformed scenario or model configuration."""


class DomainError(ValueError):
    """Raised when an operation is called outside its mathematical domain."""


def check_views(M: int, R: int | None = None) -> None:
    if M < 2:
        raise DomainError(f"need at least two views, got M={M}")
    if R is not None and R < 1:
        raise DomainError(f"quality constraint R must be >= 1, got R={R}")


def check_probability(p: float, name: str = "probability") -> float:
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ConfigurationError(f"{name} must lie in [0, 1], got {p!r}")
    return float(p)


class Slot(NamedTuple):
    """A (view, channel, rate) triple, i.e. one multicast group of a view."""

    view: int
    channel: int
    rate: float


@dataclass(frozen=True)
class Cell:
    """Radio resources of a single AP cell."""

    channels: int = DEFAULT_CHANNELS
    rates: tuple[float, ...] = DEFAULT_RATES
    frame_interval: float = DEFAULT_FRAME_INTERVAL
    video_rate: float = DEFAULT_VIDEO_RATE

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigurationError("a cell needs at least one channel")
        if not self.rates:
            raise ConfigurationError("rate set must be non-empty")
        if any(r <= 0 for r in self.rates):
            raise ConfigurationError("PHY rates must be positive")
        if self.frame_interval <= 0 or self.video_rate <= 0:
            raise ConfigurationError("frame interval and video rate must be positive")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @property
    def channel_ids(self) -> range:
        return range(1, self.channels + 1)

    def airtime(self, rate: float) -> float:
        """Seconds needed to send one frame interval of one view at ``rate`` Mbps."""
        return self.video_rate * self.frame_interval / (rate * 1e6)


@dataclass(frozen=True)
class Client:
    """A receiver in the cell.

    ``channels`` and ``rates`` are the sets C_i and D_i the client can decode,
    ``desired_views`` is K_i. ``threshold`` bounds the acceptable view failure
    probability.
    """

    id: int
    channels: frozenset[int]
    rates: frozenset[float]
    desired_views: frozenset[int] = frozenset()
    threshold: float = 0.1
    position: tuple[float, float] = (0.0, 0.0)
    max_protection_views: int = 4

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(self.channels))
        object.__setattr__(self, "rates", frozenset(float(r) for r in self.rates))
        object.__setattr__(self, "desired_views", frozenset(self.desired_views))
        if not self.channels or not self.rates:
            raise ConfigurationError(f"client {self.id}: C_i and D_i must be non-empty")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigurationError(f"client {self.id}: threshold must lie in (0, 1]")
        if self.max_protection_views < 1:
            raise ConfigurationError(f"client {self.id}: max_protection_views must be >= 1")

    @property
    def distance(self) -> float:
        return math.hypot(*self.position)

    def can_decode(self, channel: int, rate: float) -> bool:
        return channel in self.channels and float(rate) in self.rates


# --------------------------------------------------------------------------
# Loss models
# --------------------------------------------------------------------------


class LossModel:
    """Per-(client, channel, rate) loss probability of a single transmission."""

    kind = "abstract"

    def loss(self, client: Client, channel: int, rate: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ExplicitLossModel(LossModel):
    """Table lookup keyed by ``(client_id, channel, rate)``.

    ``default`` is used for missing keys; when it is ``None`` a missing key is a
    configuration error.
    """

    table: Mapping[tuple[int, int, float], float] = field(default_factory=dict)
    default: float | None = None

    kind = "explicit-table"

    def __post_init__(self):
        clean = {}
        for (cid, ch, rate), p in dict(self.table).items():
            clean[(cid, int(ch), float(rate))] = check_probability(p, f"loss[{cid},{ch},{rate}]")
        object.__setattr__(self, "table", MappingProxyType(clean))
        if self.default is not None:
            check_probability(self.default, "default loss")

    def loss(self, client: Client, channel: int, rate: float) -> float:
        key = (client.id, int(channel), float(rate))
        try:
            return self.table[key]
        except KeyError:
            if self.default is None:
                raise ConfigurationError(f"no loss probability configured for {key}") from None
            return self.default

    @classmethod
    def uniform(cls, p: float) -> "ExplicitLossModel":
        """Every client sees loss ``p`` on every channel and rate."""
        return cls({}, default=p)

    @classmethod
    def per_rate(cls, clients: Iterable[Client], losses: Mapping[float, float]) -> "ExplicitLossModel":
        """Same per-rate loss for every listed client on each of its channels."""
        table = {}
        for cl in clients:
            for ch in cl.channels:
                for rate, p in losses.items():
                    table[(cl.id, ch, float(rate))] = p
        return cls(table)


@dataclass(frozen=True)
class DistanceRateLossModel(LossModel):
    """Loss grows with rate and distance from the AP (scenario convenience).

    ``p(d, r) = 1 - (1 - base(r)) ** ((d / reference_distance) ** exponent)``

    so the loss equals ``base(r)`` at the reference distance and is the loss
    of ``(d/d0)**exponent`` independent segments otherwise. This is not a
    propagation model; it only produces plausible rate/distance orderings.
    """

    base: Mapping[float, float]
    reference_distance: float = 25.0
    exponent: float = 2.0

    kind = "distance-rate"

    def __post_init__(self):
        clean = {float(r): check_probability(p, f"base loss at {r} Mbps") for r, p in dict(self.base).items()}
        if not clean:
            raise ConfigurationError("distance-rate model needs at least one base loss")
        if self.reference_distance <= 0:
            raise ConfigurationError("reference distance must be positive")
        if self.exponent < 0:
            raise ConfigurationError("distance exponent must be >= 0")
        object.__setattr__(self, "base", MappingProxyType(clean))

    def loss(self, client: Client, channel: int, rate: float) -> float:
        try:
            base = self.base[float(rate)]
        except KeyError:
            raise ConfigurationError(f"no base loss configured for rate {rate} Mbps") from None
        scale = (client.distance / self.reference_distance) ** self.exponent
        if base >= 1.0:
            return 1.0
        return 1.0 - (1.0 - base) ** scale


def default_loss_model() -> DistanceRateLossModel:
    """Distance-rate model over :data:`DEFAULT_RATES` used by the simulator.

    The base losses apply at the cell edge (:data:`DEFAULT_CELL_RADIUS`).
    """
    return DistanceRateLossModel(dict(zip(DEFAULT_RATES, DEFAULT_BASE_LOSS)), DEFAULT_CELL_RADIUS)


def loss_probability(model: LossModel, client: Client, channel: int, rate: float) -> float:
    """Loss probability ``p_{i,c,r}`` of one transmission for ``client``."""
    if not client.can_decode(channel, rate):
        raise DomainError(f"client {client.id} cannot use channel {channel} at {rate} Mbps")
    return model.loss(client, channel, rate)


# --------------------------------------------------------------------------
# Transmission plans
# --------------------------------------------------------------------------


class TransmissionPlan(Mapping[Slot, int]):
    """Immutable multiset ``n_{j,c,r}`` of transmissions per frame interval.

    Missing slots and explicit zeros are the same thing: zeros are dropped at
    construction.
    """

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[tuple, int] | Iterable[tuple[tuple, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        clean: dict[Slot, int] = {}
        for key, n in items:
            slot = Slot(int(key[0]), int(key[1]), float(key[2]))
            n = int(n)
            if n < 0:
                raise ConfigurationError(f"negative transmission count for {slot}")
            if slot.view < 1:
                raise ConfigurationError(f"invalid view index in {slot}")
            if n:
                clean[slot] = clean.get(slot, 0) + n
        self._counts = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def from_slots(cls, slots: Iterable[tuple]) -> "TransmissionPlan":
        """One transmission per listed slot (repeats accumulate)."""
        return cls([(s, 1) for s in slots])

    def __getitem__(self, key) -> int:
        return self._counts.get(Slot(int(key[0]), int(key[1]), float(key[2])), 0)

    def __contains__(self, key) -> bool:
        return self[key] > 0

    def __iter__(self) -> Iterator[Slot]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __eq__(self, other) -> bool:
        if isinstance(other, TransmissionPlan):
            return self._counts == other._counts
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"({s.view},{s.channel},{s.rate:g})x{n}" for s, n in self._counts.items())
        return f"TransmissionPlan({body})"

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def views(self) -> set[int]:
        return {s.view for s in self._counts}

    def for_view(self, view: int) -> list[tuple[Slot, int]]:
        return [(s, n) for s, n in self._counts.items() if s.view == view]

    def added(self, slot: tuple, n: int = 1) -> "TransmissionPlan":
        return TransmissionPlan(list(self._counts.items()) + [(slot, n)])

    def restricted_to_channel(self, channel: int) -> "TransmissionPlan":
        return TransmissionPlan({s: n for s, n in self._counts.items() if s.channel == channel})

    def airtime_by_channel(self, cell: Cell) -> dict[int, float]:
        out: dict[int, float] = {}
        for s, n in self._counts.items():
            out[s.channel] = out.get(s.channel, 0.0) + n * cell.airtime(s.rate)
        return out


@dataclass(frozen=True)
class PlanVerdict:
    feasible: bool
    channel: int | None = None
    overload: float = 0.0
    airtime: Mapping[int, float] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.feasible


def validate_plan(plan: TransmissionPlan, cell: Cell) -> PlanVerdict:
    """Check every channel's airtime against the frame interval.

    On failure the most overloaded channel and its airtime/interval ratio are
    reported.
    """
    bad = {r for r in {s.rate for s in plan} if r not in cell.rates}
    if bad:
        raise ConfigurationError(f"plan uses rates outside the cell's rate set: {sorted(bad)}")
    airtime = plan.airtime_by_channel(cell)
    worst_channel, worst = None, 0.0
    for ch, t in sorted(airtime.items()):
        ratio = t / cell.frame_interval
        if ratio > worst:
            worst_channel, worst = ch, ratio
    # 1e-12 slack keeps exact fills (k views summing to the interval) feasible
    if worst > 1.0 + 1e-12:
        return PlanVerdict(False, worst_channel, worst, airtime)
    return PlanVerdict(True, None, worst, airtime)


# --------------------------------------------------------------------------
# AP transmission policies (random repeat counts)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ApTransmissionPolicy:
    """Distribution of the repeat count ``n`` per (channel, rate).

    ``distributions[(c, r)][n]`` is the probability that the AP multicasts a
    view ``n`` times on channel ``c`` at rate ``r``. Pairs that are absent
    never carry the view.
    """

    distributions: Mapping[tuple[int, float], Sequence[float]]

    def __post_init__(self):
        clean = {}
        for (ch, rate), probs in dict(self.distributions).items():
            vec = tuple(float(x) for x in probs)
            if not vec or any(x < 0 or math.isnan(x) for x in vec):
                raise ConfigurationError(f"malformed repeat distribution for ({ch}, {rate})")
            if abs(math.fsum(vec) - 1.0) > 1e-9:
                raise ConfigurationError(f"repeat distribution for ({ch}, {rate}) sums to {math.fsum(vec)}")
            clean[(int(ch), float(rate))] = vec
        object.__setattr__(self, "distributions", MappingProxyType(clean))

    def distribution(self, channel: int, rate: float) -> tuple[float, ...]:
        return self.distributions.get((int(channel), float(rate)), (1.0,))

    @classmethod
    def fixed(cls, slots: Mapping[tuple[int, float], int]) -> "ApTransmissionPolicy":
        """Deterministic repeat counts."""
        dists = {}
        for key, n in slots.items():
            vec = [0.0] * (n + 1)
            vec[n] = 1.0
            dists[key] = vec
        return cls(dists)
