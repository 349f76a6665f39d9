"""Frame-driven simulation of MVGMP against plain all-views multicast.

Both schemes see the same user population: arrivals, departures and view
changes are drawn from one generator that never looks at protocol state, so
every comparison uses common random numbers. Per-transmission reception is
drawn from a second, independent generator.

Time is measured in frames. Within a frame events run in a fixed order:
arrival, departure, view change, soft-state expiry, metric capture.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .analysis import aggregate_loss_probability, asymptotic_alpha, failure_from_view_losses
from .model import (
    DEFAULT_BASE_LOSS,
    DEFAULT_CELL_RADIUS,
    DEFAULT_RATES,
    ApTransmissionPolicy,
    Cell,
    Client,
    ConfigurationError,
    DistanceRateLossModel,
    LossModel,
    Slot,
    TransmissionPlan,
    check_views,
)
from .oracle import MonteCarloEstimate, UniformSubscription, make_rng, recoverable_views, simulate_view_sequence_alpha
from .protocol import (
    JoinMessage,
    LeaveMessage,
    ViewTable,
    expire_soft_state,
    handle_join,
    handle_leave,
    reorganize,
    reselect,
    select_views,
)

log = logging.getLogger(__name__)

PREFERENCES = ("uniform", "zipf", "normal")


@dataclass(frozen=True)
class ScenarioConfig:
    # video
    views: int = 16
    quality: int = 3
    # cell
    channels: int = 13
    rates: tuple[float, ...] = DEFAULT_RATES
    video_rate: float = 800e3
    frame_interval: float = 0.0333
    # loss model (distance-rate)
    base_loss: tuple[float, ...] = DEFAULT_BASE_LOSS
    reference_distance: float = DEFAULT_CELL_RADIUS
    distance_exponent: float = 2.0
    cell_radius: float = DEFAULT_CELL_RADIUS
    min_distance: float = 1.0
    # population
    population: int = 50
    arrival: float = 0.2
    departure: float = 0.3
    view_change: float = 0.4
    silent_leave: float = 0.0
    preference: str = "uniform"
    zipf_exponent: float = 1.0
    normal_variance: float = 1.0
    threshold_max: float = 0.1
    max_protection_views: int = 4
    # protocol
    refresh_interval: int = 20
    miss_limit: int = 3
    max_direct: int = 8
    reselect: bool = True
    spread: bool = True
    # baseline
    baseline_max_repeats: int = 8
    # run
    frames: int = 200
    seed: int = 0
    simulate_reception: bool = True

    def __post_init__(self):
        check_views(self.views, self.quality)
        for name in ("arrival", "departure", "view_change", "silent_leave"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")
        if self.preference not in PREFERENCES:
            raise ConfigurationError(f"preference must be one of {PREFERENCES}")
        if len(self.base_loss) != len(self.rates):
            raise ConfigurationError("base_loss needs one entry per rate")
        if not 0.0 < self.threshold_max <= 1.0:
            raise ConfigurationError("threshold_max must lie in (0, 1]")
        if self.frames < 0 or self.population < 0:
            raise ConfigurationError("frames and population must be >= 0")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "base_loss", tuple(float(p) for p in self.base_loss))

    @property
    def load_ratio(self) -> float:
        return math.inf if self.departure == 0 else self.arrival / self.departure

    def cell(self) -> Cell:
        return Cell(self.channels, self.rates, self.frame_interval, self.video_rate)

    def loss_model(self) -> DistanceRateLossModel:
        return DistanceRateLossModel(dict(zip(self.rates, self.base_loss)), self.reference_distance, self.distance_exponent)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


# --------------------------------------------------------------------------
# Channel time and the all-views baseline
# --------------------------------------------------------------------------


def channel_time(plan: TransmissionPlan | ViewTable, cell: Cell) -> float:
    """Airtime per frame interval of every transmission, in milliseconds."""
    if isinstance(plan, ViewTable):
        plan = plan.plan()
    return 1e3 * math.fsum(n * cell.airtime(s.rate) for s, n in plan.items())


@dataclass(frozen=True)
class BaselinePlan:
    plan: TransmissionPlan
    #: views sent at the lowest rate with the repeat cap because no
    #: (rate, repeats) pair met every subscriber's threshold
    capped: tuple[int, ...] = ()
    #: views left out this frame because no channel had room
    queued: tuple[int, ...] = ()


def _subscriber_loss(model: LossModel, client: Client, channel: int, rate: float) -> float:
    if not client.can_decode(channel, rate):
        return 1.0
    return model.loss(client, channel, rate)


def baseline_plan(
    demands: Sequence[tuple[Client, int]],
    M: int,
    model: LossModel,
    cell: Cell,
    max_repeats: int = 8,
    rotation: int = 0,
) -> BaselinePlan:
    """Multicast every desired view directly, no view synthesis.

    Each view goes to the least loaded channel at the highest rate for which
    some repeat count ``n <= max_repeats`` brings every subscriber's loss
    ``p**n`` under its threshold, with the smallest such ``n``. Views no rate
    can serve fall back to the lowest rate at ``max_repeats`` and are listed
    in ``capped``. ``rotation`` shifts the placement order so that,
    when the cell is saturated, different views are left out in different
    frames.
    """
    check_views(M)
    by_view: dict[int, list[Client]] = {}
    for client, view in demands:
        by_view.setdefault(view, []).append(client)
    order = sorted(by_view)
    if order:
        k = rotation % len(order)
        order = order[k:] + order[:k]

    load = {ch: 0.0 for ch in cell.channel_ids}
    counts: dict[Slot, int] = {}
    capped, queued = [], []
    for view in order:
        subs = by_view[view]
        ch = min(load, key=lambda c: (load[c], c))
        best = None
        for rate in sorted(cell.rates, reverse=True):
            losses = [_subscriber_loss(model, cl, ch, rate) for cl in subs]
            for n in range(1, max_repeats + 1):
                if all(p**n <= cl.threshold for p, cl in zip(losses, subs)):
                    best = (n * cell.airtime(rate), rate, n)
                    break
            if best is not None:
                break
        if best is None:
            capped.append(view)
            log.info("baseline: view %d hits the repeat cap %d", view, max_repeats)
            best = (max_repeats * cell.airtime(min(cell.rates)), min(cell.rates), max_repeats)
        t, rate, n = best
        if load[ch] + t > cell.frame_interval * (1 + 1e-12):
            queued.append(view)
            log.info("baseline: view %d queued, no channel has %.3f ms left", view, 1e3 * t)
            continue
        load[ch] += t
        counts[Slot(view, ch, rate)] = n
    return BaselinePlan(TransmissionPlan(counts), tuple(sorted(capped)), tuple(sorted(queued)))


# --------------------------------------------------------------------------
# Population
# --------------------------------------------------------------------------


def preference_distribution(dist: str, M: int, zipf_exponent: float = 1.0, normal_variance: float = 1.0) -> np.ndarray:
    """Probability of each view ``1..M`` being the preferred one.

    Zipf ranks map to view indices by identity (rank 1 is view 1). The normal
    density (mean ``M/2``) is evaluated at the view indices and renormalised.
    """
    check_views(M)
    k = np.arange(1, M + 1, dtype=float)
    if dist == "uniform":
        w = np.ones(M)
    elif dist == "zipf":
        w = 1.0 / k**zipf_exponent
    elif dist == "normal":
        w = np.exp(-((k - M / 2) ** 2) / (2 * normal_variance))
    else:
        raise ConfigurationError(f"unknown preference distribution {dist!r}")
    return w / w.sum()


def sample_preference(dist: str, M: int, rng: np.random.Generator, **kw) -> int:
    return int(rng.choice(M, p=preference_distribution(dist, M, **kw))) + 1


@dataclass
class ActiveClient:
    client: Client
    desired: int
    joined: int
    infeasible: bool = False


def _new_client(cid: int, cfg: ScenarioConfig, rng: np.random.Generator, frame: int) -> ActiveClient:
    # fixed number of draws per arrival keeps the population stream aligned
    u_r, u_a, u_t = rng.random(3)
    radius = max(cfg.min_distance, cfg.cell_radius * math.sqrt(u_r))
    angle = 2 * math.pi * u_a
    threshold = cfg.threshold_max * (1.0 - u_t)  # (0, threshold_max]
    desired = sample_preference(
        cfg.preference, cfg.views, rng, zipf_exponent=cfg.zipf_exponent, normal_variance=cfg.normal_variance
    )
    client = Client(
        cid,
        frozenset(range(1, cfg.channels + 1)),
        frozenset(cfg.rates),
        frozenset({desired}),
        threshold,
        (radius * math.cos(angle), radius * math.sin(angle)),
        cfg.max_protection_views,
    )
    return ActiveClient(client, desired, frame)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRecord:
    frame: int
    active_clients: int
    mvgmp_channel_time: float
    baseline_channel_time: float
    mvgmp_instances: int
    baseline_transmissions: int
    mvgmp_mean_failure: float
    mvgmp_max_failure: float
    baseline_mean_failure: float
    mean_alpha: float
    infeasible_clients: int
    baseline_capped_views: int


FRAME_COLUMNS = tuple(f.name for f in fields(MetricsRecord))


@dataclass
class ClientStats:
    client: int
    distance: float
    threshold: float
    frames: int = 0
    failures: int = 0
    expected_failures: float = 0.0
    variance: float = 0.0
    max_failure: float = 0.0
    infeasible_frames: int = 0
    #: predicted failure probability of every measured frame
    predicted: list[float] = field(default_factory=list, repr=False)

    @property
    def z_score(self) -> float:
        """Normal-approximation score of the observed failure count."""
        diff = self.failures - self.expected_failures
        if self.variance == 0.0:
            return 0.0 if abs(diff) < 1e-9 else math.inf
        return diff / math.sqrt(self.variance)

    @property
    def exact_z(self) -> float:
        """Two-sided exact tail of the failure count, on the normal scale.

        The count is a sum of independent per-frame Bernoulli draws; its exact
        law gives the tail probability, which is mapped back to the number of
        standard deviations a normal variable would need for the same tail.
        Unlike :attr:`z_score` this stays calibrated for rare failures.
        """
        pmf = failure_count_distribution(self.predicted)
        k = self.failures
        tail = min(1.0, 2.0 * min(math.fsum(pmf[: k + 1]), math.fsum(pmf[k:])))
        if tail >= 1.0:
            return 0.0
        if tail <= 0.0:
            return math.copysign(math.inf, k - self.expected_failures)
        return math.copysign(NormalDist().inv_cdf(1.0 - tail / 2.0), k - self.expected_failures)


def failure_count_distribution(probabilities: Sequence[float]) -> np.ndarray:
    """Law of the number of successes of independent Bernoulli trials."""
    pmf = np.zeros(len(probabilities) + 1)
    pmf[0] = 1.0
    for i, p in enumerate(probabilities, start=1):
        pmf[1 : i + 1] = pmf[1 : i + 1] * (1.0 - p) + pmf[:i] * p
        pmf[0] *= 1.0 - p
    return pmf


CLIENT_COLUMNS = (
    "client",
    "distance",
    "threshold",
    "frames",
    "failures",
    "expected_failures",
    "variance",
    "max_failure",
    "infeasible_frames",
    "z_score",
    "exact_z",
)


@dataclass
class RunResult:
    config: ScenarioConfig
    records: list[MetricsRecord]
    clients: dict[int, ClientStats]
    events: dict[str, int] = field(default_factory=dict)

    def _run_frames(self) -> list[MetricsRecord]:
        return self.records[1:] or self.records[:1]

    @property
    def mean_mvgmp_channel_time(self) -> float:
        return float(np.mean([r.mvgmp_channel_time for r in self._run_frames()]))

    @property
    def mean_baseline_channel_time(self) -> float:
        return float(np.mean([r.baseline_channel_time for r in self._run_frames()]))

    @property
    def mean_alpha(self) -> float:
        return float(np.mean([r.mean_alpha for r in self._run_frames()]))

    @property
    def infeasible_frames(self) -> int:
        return sum(1 for r in self._run_frames() if r.infeasible_clients)

    def summary(self) -> dict[str, float]:
        ct_m, ct_b = self.mean_mvgmp_channel_time, self.mean_baseline_channel_time
        return {
            "seed": self.config.seed,
            "frames": self.config.frames,
            "mean_active_clients": float(np.mean([r.active_clients for r in self._run_frames()])),
            "mvgmp_channel_time": ct_m,
            "baseline_channel_time": ct_b,
            "channel_time_ratio": ct_m / ct_b if ct_b else math.nan,
            "mvgmp_mean_failure": float(np.mean([r.mvgmp_mean_failure for r in self._run_frames()])),
            "baseline_mean_failure": float(np.mean([r.baseline_mean_failure for r in self._run_frames()])),
            "mean_alpha": self.mean_alpha,
            "infeasible_frames": self.infeasible_frames,
            **{f"events_{k}": v for k, v in sorted(self.events.items())},
        }


# --------------------------------------------------------------------------
# The simulation
# --------------------------------------------------------------------------


class ScenarioInfeasible(RuntimeError):
    pass


class Simulation:
    """One seeded run; call :meth:`run` once."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.cell = cfg.cell()
        self.model = cfg.loss_model()
        self.table = ViewTable(self.cell)
        root = np.random.SeedSequence(cfg.seed)
        pop_seq, rx_seq = root.spawn(2)
        self.pop_rng = make_rng(pop_seq)
        self.rx_rng = make_rng(rx_seq)
        self.active: dict[int, ActiveClient] = {}
        self.next_id = 1
        self.stats: dict[int, ClientStats] = {}
        self.events = {"arrivals": 0, "departures": 0, "silent_departures": 0, "view_changes": 0, "reorganizations": 0, "reselections": 0, "expired": 0}
        self._baseline_key = None
        self._baseline: BaselinePlan | None = None

    # -- protocol actions -------------------------------------------------

    def _join(self, ac: ActiveClient, frame: int) -> None:
        sel = select_views(
            ac.client,
            ac.desired,
            self.table,
            self.cfg.quality,
            self.model,
            self.cfg.views,
            max_direct=self.cfg.max_direct,
            spread=self.cfg.spread,
        )
        ac.infeasible = sel.infeasible
        msg = sel.join(ac.client.id, frame)
        if msg is not None:
            handle_join(self.table, msg, frame)
        elif self.table.subscriptions(ac.client.id):
            handle_leave(self.table, LeaveMessage(ac.client.id, tuple(self.table.subscriptions(ac.client.id)), frame), frame)

    def _leave(self, ac: ActiveClient, frame: int) -> None:
        subs = self.table.subscriptions(ac.client.id)
        if not subs:
            return
        res = handle_leave(self.table, LeaveMessage(ac.client.id, tuple(subs), frame), frame)
        self._reorganize(res.notices, frame)

    def _reorganize(self, notices, frame: int) -> None:
        for slot, members in sorted(notices.items()):
            for cid in sorted(members):
                ac = self.active.get(cid)
                if ac is None or slot not in self.table:
                    continue
                if slot not in self.table.subscriptions(cid):
                    continue
                out = reorganize(ac.client, ac.desired, slot.view, self.table, self.cfg.quality, self.model, self.cfg.views, now=frame)
                if out is None:
                    continue
                self.events["reorganizations"] += 1
                res = handle_leave(self.table, out.leave, frame)
                if out.join is not None:
                    handle_join(self.table, out.join, frame)
                # withdrawn instances cannot trigger further notices: they had no subscribers left
                del res

    def _arrive(self, frame: int) -> None:
        ac = _new_client(self.next_id, self.cfg, self.pop_rng, frame)
        self.next_id += 1
        self.active[ac.client.id] = ac
        self.stats[ac.client.id] = ClientStats(ac.client.id, ac.client.distance, ac.client.threshold)
        self.events["arrivals"] += 1
        self._join(ac, frame)

    def _depart(self, frame: int) -> None:
        u_pick, u_silent = self.pop_rng.random(2)
        if not self.active:
            return
        ids = sorted(self.active)
        ac = self.active.pop(ids[int(u_pick * len(ids))])
        self.events["departures"] += 1
        if u_silent < self.cfg.silent_leave:
            self.events["silent_departures"] += 1
            return
        self._leave(ac, frame)

    def _change_view(self, frame: int) -> None:
        u_pick = self.pop_rng.random()
        desired = sample_preference(
            self.cfg.preference,
            self.cfg.views,
            self.pop_rng,
            zipf_exponent=self.cfg.zipf_exponent,
            normal_variance=self.cfg.normal_variance,
        )
        if not self.active:
            return
        ids = sorted(self.active)
        ac = self.active[ids[int(u_pick * len(ids))]]
        self.events["view_changes"] += 1
        self._leave(ac, frame)
        ac.desired = desired
        ac.client = replace(ac.client, desired_views=frozenset({desired}))
        self._join(ac, frame)

    def _refresh(self, frame: int) -> None:
        every = self.cfg.refresh_interval
        for cid in sorted(self.active):
            ac = self.active[cid]
            if (frame - ac.joined) % every == 0:
                self._refresh_client(ac, frame)

    def _refresh_client(self, ac: ActiveClient, frame: int) -> None:
        cid = ac.client.id
        if self.cfg.reselect:
            sel = reselect(
                ac.client,
                ac.desired,
                self.table,
                self.cfg.quality,
                self.model,
                self.cfg.views,
                max_direct=self.cfg.max_direct,
                spread=self.cfg.spread,
            )
            if sel is not None:
                self.events["reselections"] += 1
                ac.infeasible = False
                handle_join(self.table, sel.join(cid, frame), frame)
                return
        subs = self.table.subscriptions(cid)
        if subs:
            handle_join(self.table, JoinMessage(cid, tuple(subs), frame), frame)

    # -- metrics ----------------------------------------------------------

    def _baseline_plan(self, frame: int) -> BaselinePlan:
        key = tuple(sorted((cid, ac.desired) for cid, ac in self.active.items()))
        if key != self._baseline_key or (self._baseline and self._baseline.queued):
            demands = [(self.active[cid].client, v) for cid, v in key]
            self._baseline = baseline_plan(
                demands, self.cfg.views, self.model, self.cell, self.cfg.baseline_max_repeats, rotation=frame
            )
            self._baseline_key = key
        return self._baseline

    def _measure(self, frame: int) -> MetricsRecord:
        M, R = self.cfg.views, self.cfg.quality
        base = self._baseline_plan(frame)
        subs_by_client: dict[int, list[Slot]] = {cid: [] for cid in self.active}
        for inst in self.table.instances():
            for cid in inst.subscribers:
                if cid in subs_by_client:
                    subs_by_client[cid].append(inst.slot)

        failures, base_failures, infeasible = [], [], 0
        draws = self.rx_rng.random(sum(len(v) for v in subs_by_client.values())) if self.cfg.simulate_reception else None
        cursor = 0
        for cid in sorted(self.active):
            ac = self.active[cid]
            cl = ac.client
            losses = [1.0] * (M + 1)
            slots = subs_by_client[cid]
            slot_losses = [_subscriber_loss(self.model, cl, s.channel, s.rate) for s in slots]
            for s, p in zip(slots, slot_losses):
                losses[s.view] *= p
            f = failure_from_view_losses(losses, ac.desired, M, R)
            failures.append(f)
            if f > cl.threshold + 1e-12:
                infeasible += 1
            st = self.stats[cid]
            st.frames += 1
            st.max_failure = max(st.max_failure, f)
            st.infeasible_frames += f > cl.threshold + 1e-12
            if draws is not None:
                got = {s.view for s, p, u in zip(slots, slot_losses, draws[cursor : cursor + len(slots)]) if u >= p}
                cursor += len(slots)
                st.failures += ac.desired not in recoverable_views(got, M, R)
                st.expected_failures += f
                st.variance += f * (1.0 - f)
                st.predicted.append(f)

            b = 1.0
            for s, n in base.plan.for_view(ac.desired):
                b *= _subscriber_loss(self.model, cl, s.channel, s.rate) ** n
            base_failures.append(b)

        n = len(failures)
        mean_f = math.fsum(failures) / n if n else 0.0
        return MetricsRecord(
            frame=frame,
            active_clients=n,
            mvgmp_channel_time=channel_time(self.table.plan(), self.cell),
            baseline_channel_time=channel_time(base.plan, self.cell),
            mvgmp_instances=len(self.table),
            baseline_transmissions=base.plan.total,
            mvgmp_mean_failure=mean_f,
            mvgmp_max_failure=max(failures, default=0.0),
            baseline_mean_failure=math.fsum(base_failures) / n if n else 0.0,
            mean_alpha=1.0 - mean_f,
            infeasible_clients=infeasible,
            baseline_capped_views=len(base.capped),
        )

    # -- main loop --------------------------------------------------------

    def step(self, frame: int) -> None:
        """Population dynamics of one frame: arrival, departure, view change."""
        u_arr, u_dep, u_chg = self.pop_rng.random(3)
        if u_arr < self.cfg.arrival:
            self._arrive(frame)
        if u_dep < self.cfg.departure:
            self._depart(frame)
        if u_chg < self.cfg.view_change:
            self._change_view(frame)

    def run(self) -> RunResult:
        cfg = self.cfg
        for _ in range(cfg.population):
            self._arrive(0)
        stuck = sorted(cid for cid, ac in self.active.items() if ac.infeasible)
        if stuck or not self.table.is_feasible():
            raise ScenarioInfeasible(
                f"initial population exceeds the cell's airtime: {len(stuck)} of {cfg.population} clients "
                f"cannot meet their threshold (first: client {stuck[0] if stuck else '-'}), "
                f"channel time {channel_time(self.table, self.cell):.3f} ms over {cfg.channels} channels"
            )
        records = [self._measure(0)]
        for frame in range(1, cfg.frames + 1):
            self.step(frame)
            self._refresh(frame)
            exp = expire_soft_state(self.table, frame, cfg.refresh_interval, cfg.miss_limit)
            self.events["expired"] += len(exp.expired)
            records.append(self._measure(frame))
        return RunResult(cfg, records, self.stats, dict(self.events))


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Run one seeded scenario for both schemes."""
    return Simulation(cfg).run()


def step_dynamics(sim: Simulation, frame: int) -> Simulation:
    """Advance the population of ``sim`` by one frame (no metrics)."""
    sim.step(frame)
    return sim


# --------------------------------------------------------------------------
# Aggregation across seeds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SeedSummary:
    metric: str
    mean: float
    half_width: float
    n: int


def confidence_interval(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% half-width (normal approximation)."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()) if arr.size else math.nan, 0.0
    return float(arr.mean()), float(1.96 * arr.std(ddof=1) / math.sqrt(arr.size))


def summarize_runs(results: Sequence[RunResult]) -> dict[str, SeedSummary]:
    keys = [k for k in results[0].summary() if k not in ("seed", "frames")]
    out = {}
    for k in keys:
        vals = [r.summary()[k] for r in results]
        m, h = confidence_interval(vals)
        out[k] = SeedSummary(k, m, h, len(vals))
    return out


# --------------------------------------------------------------------------
# Analysis-vs-simulation checks
# --------------------------------------------------------------------------


def failure_z_scores(result: RunResult, exact: bool = True) -> dict[int, float]:
    """Per client: observed vs. predicted failures over the run, in standard deviations.

    ``exact`` uses :attr:`ClientStats.exact_z`; otherwise the normal
    approximation :attr:`ClientStats.z_score`.
    """
    key = "exact_z" if exact else "z_score"
    return {cid: getattr(st, key) for cid, st in sorted(result.clients.items()) if st.frames}


@dataclass(frozen=True)
class AlphaCheck:
    distance: float
    R: int
    loss: float
    closed_form: float
    simulated: MonteCarloEstimate


def reference_policy(cfg: ScenarioConfig) -> ApTransmissionPolicy:
    """Random repeat counts used for the long-sequence acquisition check.

    Channel 1 carries each view at the fourth configured rate 0, 1 or 2 times;
    channel 2 carries it at the sixth rate 0 or 1 times.
    """
    rates = cfg.rates
    r1 = rates[min(3, len(rates) - 1)]
    r2 = rates[min(5, len(rates) - 1)]
    dists = {(1, r1): (0.2, 0.6, 0.2)}
    if cfg.channels >= 2:
        dists[(2, r2)] = (0.5, 0.5)
    return ApTransmissionPolicy(dists)


def alpha_validation(
    cfg: ScenarioConfig,
    R_values: Iterable[int] = (1, 2, 3),
    distances: Iterable[float] = (15.0, 30.0, 45.0),
    M_large: int = 1_000_000,
    p_select: float = 0.8,
    seed: int | None = None,
) -> list[AlphaCheck]:
    """Simulated acquisition ratio of long uniform subscriptions vs. the closed form."""
    model = cfg.loss_model()
    policy = reference_policy(cfg)
    rng = make_rng(cfg.seed if seed is None else seed)
    out = []
    for d in distances:
        client = Client(0, frozenset(range(1, cfg.channels + 1)), frozenset(cfg.rates), position=(d, 0.0))
        p = aggregate_loss_probability(client, policy, model)
        for R in R_values:
            est = simulate_view_sequence_alpha(
                R, UniformSubscription(p_select), M_large, rng, policy=policy, client=client, model=model
            )
            out.append(AlphaCheck(d, R, p, asymptotic_alpha(p, R), est))
    return out


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_frames_csv(result: RunResult, path, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAME_COLUMNS)
        for rec in result.records:
            w.writerow([_fmt(v) for v in asdict(rec).values()])


def write_clients_csv(result: RunResult, path, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CLIENT_COLUMNS)
        for cid, st in sorted(result.clients.items()):
            row = [getattr(st, c) for c in CLIENT_COLUMNS]
            w.writerow([_fmt(v) for v in row])
