"""Client-side view selection for MVGMP.

A client picks the instances to subscribe so that its view failure
probability stays under its threshold while asking the AP for as little new
airtime as possible:

1. subscribe the desired view if the table already carries it well enough;
2. otherwise add left/right reference views that the table already carries,
   greedily by largest failure decrement;
3. otherwise ask for new instances of the desired view: the same-rate bundle
   that meets the threshold with the least airtime, then redo step 2.

Ties are broken towards smaller view distance, higher PHY rate and lower
channel index so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..analysis import failure_from_view_losses
from ..model import Client, LossModel, Slot, check_views, loss_probability
from .messages import JoinMessage, LeaveMessage
from .table import ViewTable

#: Upper bound on instances of the desired view a single client may request.
MAX_DIRECT_INSTANCES = 8

_EPS = 1e-12


@dataclass(frozen=True)
class ViewSelection:
    desired: int
    direct: tuple[Slot, ...]
    protection: tuple[Slot, ...]
    created: tuple[Slot, ...]
    predicted_failure: float
    infeasible: bool = False

    @property
    def slots(self) -> tuple[Slot, ...]:
        return tuple(sorted(set(self.direct) | set(self.protection)))

    def join(self, client: int, now: float = 0.0) -> JoinMessage | None:
        return JoinMessage(client, self.slots, now) if self.slots else None


class _Evaluator:
    """Failure probability of candidate subscriptions for one client/view."""

    def __init__(self, client: Client, desired: int, model: LossModel, M: int, R: int):
        self.client = client
        self.desired = desired
        self.model = model
        self.M = M
        self.R = R
        self._loss: dict[Slot, float] = {}

    def usable(self, slot: Slot) -> bool:
        return self.client.can_decode(slot.channel, slot.rate)

    def loss(self, slot: Slot) -> float:
        p = self._loss.get(slot)
        if p is None:
            p = loss_probability(self.model, self.client, slot.channel, slot.rate)
            self._loss[slot] = p
        return p

    def failure(self, slots: Sequence[Slot]) -> float:
        losses = [1.0] * (self.M + 1)
        for s in slots:
            losses[s.view] *= self.loss(s)
        return failure_from_view_losses(losses, self.desired, self.M, self.R)

    def in_range(self, slot: Slot) -> bool:
        return slot.view != self.desired and abs(slot.view - self.desired) < self.R


def _move_key(decrement: float, move: tuple[Slot, ...], desired: int):
    return (
        -round(decrement, 12),
        sum(abs(s.view - desired) for s in move),
        -min(s.rate for s in move),
        tuple(s.channel for s in move),
        move,
    )


def _protect(
    ev: _Evaluator, base: Sequence[Slot], candidates: Sequence[Slot], threshold: float, cap: int
) -> tuple[list[Slot], float]:
    """Greedy left/right additions on top of ``base``."""
    chosen: list[Slot] = []
    current = list(base)
    f = ev.failure(current)
    d, R = ev.desired, ev.R
    while f > threshold and len(chosen) < cap:
        taken = set(current)
        lefts = [c for c in candidates if c.view < d and c not in taken]
        rights = [c for c in candidates if c.view > d and c not in taken]
        has_left = any(s.view < d for s in current)
        has_right = any(s.view > d for s in current)
        moves: list[tuple[Slot, ...]] = []
        if len(chosen) + 2 <= cap:
            moves += [(l, r) for l in lefts for r in rights if r.view - l.view <= R]
        if has_right:
            moves += [(l,) for l in lefts]
        if has_left:
            moves += [(r,) for r in rights]
        best = None
        for mv in moves:
            dec = f - ev.failure(current + list(mv))
            if dec <= _EPS:
                continue
            key = _move_key(dec, mv, d)
            if best is None or key < best[0]:
                best = (key, mv)
        if best is None:
            break
        chosen.extend(best[1])
        current.extend(best[1])
        f = ev.failure(current)
    return chosen, f


def _prune(ev: _Evaluator, direct: list[Slot], protection: list[Slot], threshold: float):
    """Drop subscriptions that are not needed to stay under the threshold."""
    for group in (protection, direct):
        order = sorted(group, key=lambda s: (-ev.loss(s), -abs(s.view - ev.desired), s))
        for s in order:
            trial = [x for x in direct + protection if x != s]
            if ev.failure(trial) <= threshold:
                group.remove(s)
    return direct, protection


def _free_slots(
    ev: _Evaluator, table: ViewTable, taken: Sequence[Slot], rate: float, k: int, view: int | None = None
) -> list[Slot] | None:
    """``k`` new instances of ``view`` (default: the desired one) at ``rate`` on distinct channels."""
    view = ev.desired if view is None else view
    picked: list[Slot] = []
    channels = sorted(ev.client.channels, key=lambda ch: (ev.loss(Slot(view, ch, rate)), ch))
    for ch in channels:
        slot = Slot(view, ch, rate)
        if slot in table or slot in taken:
            continue
        if table.fits(list(taken) + picked + [slot]):
            picked.append(slot)
            if len(picked) == k:
                return picked
    return None


def _coverage(views: set[int], M: int, R: int) -> int:
    """How many of the views ``1..M`` are carried or synthesizable from ``views``."""
    got = sorted(views)
    n = len(got)
    for a, b in zip(got, got[1:]):
        if b - a <= R:
            n += b - a - 1
    return n


def _cheapest_bundle(ev, table, direct, created, candidates, thr, cap, max_direct, spread) -> list[Slot] | None:
    """Least-airtime set of same-view, same-rate new instances that meets the threshold.

    With ``spread`` the bundle may carry a reference view within ``R - 1`` of
    the desired one; equal-airtime bundles then go to the view that leaves
    the most views synthesizable from the table.
    """
    views = [ev.desired]
    if spread:
        views += [u for u in range(ev.desired - ev.R + 1, ev.desired + ev.R) if u != ev.desired and 1 <= u <= ev.M]
    carried = {s.view for s in table.slots()} | {s.view for s in created}
    best = None
    for view in views:
        reach = -_coverage(carried | {view}, ev.M, ev.R) if spread else 0
        for rate in sorted(ev.client.rates, reverse=True):
            for k in range(1, max_direct - len(created) + 1):
                cost = k * table.cell.airtime(rate)
                key = (round(cost, 15), reach, abs(view - ev.desired), -rate)
                if best is not None and key >= best[0]:
                    break
                slots = _free_slots(ev, table, created, rate, k, view)
                if slots is None:
                    break
                room = cap - (k if view != ev.desired else 0)
                if room < 0:
                    break
                _, f_new = _protect(ev, direct + created + slots, candidates, thr, room)
                if f_new <= thr:
                    best = (key, slots)
                    break
    return None if best is None else best[1]


def _most_efficient_instance(ev, table, direct, created, candidates, thr, cap, f) -> Slot | None:
    """Single new instance with the largest log-failure drop per unit airtime."""
    best = None
    for rate in sorted(ev.client.rates, reverse=True):
        slots = _free_slots(ev, table, created, rate, 1)
        if slots is None:
            continue
        _, f_new = _protect(ev, direct + created + slots, candidates, thr, cap)
        gain = math.inf if f_new == 0.0 else math.log(f / f_new)
        key = (-gain / table.cell.airtime(rate), f_new, -rate, slots[0].channel)
        if best is None or key < best[0]:
            best = (key, slots[0])
    return None if best is None else best[1]


def select_views(
    client: Client,
    desired: int,
    table: ViewTable,
    R: int,
    model: LossModel,
    M: int,
    threshold: float | None = None,
    max_direct: int = MAX_DIRECT_INSTANCES,
    spread: bool = False,
) -> ViewSelection:
    """Choose the instances ``client`` should join to watch ``desired``.

    The returned selection lists existing instances plus those the AP must
    create (``created``). New instances carry the desired view, or with
    ``spread`` possibly a reference view within ``R - 1`` of it. They always
    fit the channel budget. ``infeasible`` is set when the threshold cannot
    be met with the airtime left; the selection is then the best found.
    """
    check_views(M, R)
    thr = client.threshold if threshold is None else threshold
    ev = _Evaluator(client, desired, model, M, R)
    cap = client.max_protection_views

    existing = [s for s in table.slots() if ev.usable(s)]
    direct = [s for s in existing if s.view == desired]
    candidates = [s for s in existing if ev.in_range(s)]
    created: list[Slot] = []

    def refs() -> int:
        return sum(1 for s in created if s.view != desired)

    protection, f = _protect(ev, direct, candidates, thr, cap)
    while f > thr and len(created) < max_direct:
        bundle = _cheapest_bundle(ev, table, direct, created, candidates, thr, cap - refs(), max_direct, spread)
        if bundle:
            created += bundle
        else:
            step = _most_efficient_instance(ev, table, direct, created, candidates, thr, cap - refs(), f)
            if step is None:
                break
            created.append(step)
        protection, f = _protect(ev, direct + created, candidates, thr, cap - refs())

    direct = direct + [s for s in created if s.view == desired]
    protection = [s for s in created if s.view != desired] + protection
    if f <= thr:
        direct, protection = _prune(ev, direct, protection, thr)
        f = ev.failure(direct + protection)
    kept = set(direct) | set(protection)
    created = [s for s in created if s in kept]
    return ViewSelection(
        desired,
        tuple(sorted(direct)),
        tuple(sorted(protection)),
        tuple(sorted(created)),
        f,
        infeasible=f > thr,
    )


@dataclass(frozen=True)
class Reorganization:
    leave: LeaveMessage
    join: JoinMessage | None
    predicted_failure: float


def reorganize(
    client: Client,
    desired: int,
    affected_view: int,
    table: ViewTable,
    R: int,
    model: LossModel,
    M: int,
    threshold: float | None = None,
    now: float = 0.0,
) -> Reorganization | None:
    """Try to stop receiving ``affected_view`` after another client left it.

    Dropping it outright is preferred; otherwise it is swapped for one
    instance the table already carries (favouring widely shared ones). Nothing
    is emitted unless the failure probability stays under the threshold.
    """
    thr = client.threshold if threshold is None else threshold
    ev = _Evaluator(client, desired, model, M, R)
    current = table.subscriptions(client.id)
    affected = [s for s in current if s.view == affected_view]
    if not affected:
        return None
    rest = [s for s in current if s.view != affected_view]
    leave = LeaveMessage(client.id, tuple(affected), now)

    f = ev.failure(rest)
    if f <= thr:
        return Reorganization(leave, None, f)

    best = None
    for inst in table.instances():
        s = inst.slot
        if s in current or s.view == affected_view or not ev.usable(s):
            continue
        if s.view != desired and not ev.in_range(s):
            continue
        f_alt = ev.failure(rest + [s])
        if f_alt > thr:
            continue
        key = (-len(inst.subscribers), round(f_alt, 12), -s.rate, s.channel, s)
        if best is None or key < best[0]:
            best = (key, s, f_alt)
    if best is None:
        return None
    _, alt, f_alt = best
    return Reorganization(leave, JoinMessage(client.id, tuple(rest) + (alt,), now), f_alt)


def _exclusive_airtime(table: ViewTable, client: int, slots) -> float:
    return sum(table.cell.airtime(s.rate) for s in slots if table.subscribers(s) <= {client})


def reselect(
    client: Client,
    desired: int,
    table: ViewTable,
    R: int,
    model: LossModel,
    M: int,
    threshold: float | None = None,
    max_direct: int = MAX_DIRECT_INSTANCES,
    spread: bool = False,
) -> ViewSelection | None:
    """Re-plan a subscribed client against the current table.

    The client plans as if it held nothing, so instances only it keeps alive
    count as new airtime. The new selection is returned only when it meets
    the threshold and frees airtime; otherwise ``None`` (keep the current
    subscriptions).
    """
    thr = client.threshold if threshold is None else threshold
    current = table.subscriptions(client.id)
    held = _exclusive_airtime(table, client.id, current)
    if held == 0.0:
        return None
    others = table.snapshot()
    for s in current:
        del others.get(s).subscribers[client.id]
    others._withdraw_empty(current)
    sel = select_views(client, desired, others, R, model, M, thr, max_direct, spread)
    if sel.infeasible:
        return None
    cost = sum(table.cell.airtime(s.rate) for s in sel.created)
    if cost >= held - 1e-15 or set(sel.slots) == set(current):
        return None
    return sel
