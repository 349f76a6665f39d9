"""AP-side ViewTable and the Join / Leave / soft-state handlers.

The table has a single owner (the AP event loop); handlers mutate it in place
and bump :attr:`ViewTable.version` on every change. Use :meth:`snapshot` to
hand a read-only copy to clients.
"""

from __future__ import annotations

import copy
import ipaddress
import logging
from dataclasses import dataclass, field
from typing import Iterable

from ..model import Cell, Slot, TransmissionPlan, validate_plan
from .messages import AdvertEntry, JoinMessage, LeaveMessage, TableAdvert

log = logging.getLogger(__name__)

#: First group address handed out (administratively scoped range).
BASE_ADDRESS = int(ipaddress.IPv4Address("239.192.0.1"))


@dataclass
class ViewInstance:
    slot: Slot
    address: str
    subscribers: dict[int, float] = field(default_factory=dict)


class ViewTable:
    """Multicast view instances currently carried by the AP."""

    def __init__(self, cell: Cell | None = None):
        self.cell = cell or Cell()
        self.version = 0
        self._instances: dict[Slot, ViewInstance] = {}
        self._next_address = BASE_ADDRESS
        self._airtime: dict[int, float] = {}

    # -- queries ---------------------------------------------------------

    def __contains__(self, slot) -> bool:
        return Slot(*slot) in self._instances

    def __len__(self) -> int:
        return len(self._instances)

    def __iter__(self):
        return iter(self.instances())

    def get(self, slot) -> ViewInstance | None:
        return self._instances.get(Slot(*slot))

    def instances(self) -> list[ViewInstance]:
        return [self._instances[s] for s in sorted(self._instances)]

    def slots(self) -> list[Slot]:
        return sorted(self._instances)

    def subscriptions(self, client: int) -> list[Slot]:
        return sorted(s for s, inst in self._instances.items() if client in inst.subscribers)

    def subscribers(self, slot) -> set[int]:
        inst = self.get(slot)
        return set(inst.subscribers) if inst else set()

    def plan(self) -> TransmissionPlan:
        return TransmissionPlan.from_slots(self._instances)

    def channel_airtime(self, channel: int) -> float:
        return self._airtime.get(channel, 0.0)

    def channel_time_ms(self) -> float:
        return 1e3 * sum(self.cell.airtime(s.rate) for s in self._instances)

    def fits(self, extra: Iterable[Slot]) -> bool:
        """Would the table stay feasible with ``extra`` instances added?"""
        load = dict(self._airtime)
        for s in extra:
            if s.rate not in self.cell.rates or s.channel not in self.cell.channel_ids:
                return False
            load[s.channel] = load.get(s.channel, 0.0) + self.cell.airtime(s.rate)
        return all(t <= self.cell.frame_interval * (1 + 1e-12) for t in load.values())

    def is_feasible(self) -> bool:
        return validate_plan(self.plan(), self.cell).feasible

    def snapshot(self) -> "ViewTable":
        return copy.deepcopy(self)

    def advert(self) -> TableAdvert:
        return TableAdvert(
            self.version,
            tuple(AdvertEntry(i.slot, i.address, len(i.subscribers)) for i in self.instances()),
        )

    # -- mutation (owner only) -------------------------------------------

    def _create(self, slot: Slot) -> ViewInstance:
        inst = ViewInstance(slot, str(ipaddress.IPv4Address(self._next_address)))
        self._next_address += 1
        self._instances[slot] = inst
        self._airtime[slot.channel] = self._airtime.get(slot.channel, 0.0) + self.cell.airtime(slot.rate)
        return inst

    def _withdraw(self, slot: Slot) -> None:
        del self._instances[slot]
        # recomputed, not decremented, so float drift cannot accumulate
        rest = [self.cell.airtime(s.rate) for s in sorted(self._instances) if s.channel == slot.channel]
        if rest:
            self._airtime[slot.channel] = sum(rest)
        else:
            self._airtime.pop(slot.channel)

    def _withdraw_empty(self, slots: Iterable[Slot]) -> list[Slot]:
        gone = []
        for s in sorted(set(slots)):
            inst = self._instances.get(s)
            if inst is not None and not inst.subscribers:
                self._withdraw(s)
                gone.append(s)
        return gone


@dataclass(frozen=True)
class JoinResult:
    created: tuple[Slot, ...] = ()
    rejected: tuple[Slot, ...] = ()
    withdrawn: tuple[Slot, ...] = ()


@dataclass(frozen=True)
class LeaveResult:
    withdrawn: tuple[Slot, ...] = ()
    #: remaining subscribers of every instance the leaver dropped
    notices: dict[Slot, frozenset[int]] = field(default_factory=dict)


@dataclass(frozen=True)
class ExpiryResult:
    expired: tuple[tuple[int, Slot], ...] = ()
    withdrawn: tuple[Slot, ...] = ()


def handle_join(table: ViewTable, msg: JoinMessage, now: float) -> JoinResult:
    """Apply a (declarative) Join.

    The client ends up subscribed to exactly the accepted instances of
    ``msg``. Missing instances are created when the channel has room,
    otherwise reported as rejected. Instances the client drops and nobody
    else holds are withdrawn.
    """
    wanted = list(dict.fromkeys(msg.views))
    keep = set(wanted)
    dropped = [s for s in table.subscriptions(msg.client) if s not in keep]
    for s in dropped:
        del table.get(s).subscribers[msg.client]
    # released airtime is available to the instances this join creates
    withdrawn = table._withdraw_empty(dropped)
    created, rejected = [], []
    for slot in wanted:
        if slot not in table:
            if not table.fits([slot]):
                rejected.append(slot)
                continue
            table._create(slot)
            created.append(slot)
        table.get(slot).subscribers[msg.client] = now
    if rejected:
        log.info("client %s: %d instance(s) rejected for lack of airtime", msg.client, len(rejected))
    table.version += 1
    return JoinResult(tuple(created), tuple(rejected), tuple(withdrawn))


def handle_leave(table: ViewTable, msg: LeaveMessage, now: float) -> LeaveResult:
    """Remove the client from the listed instances and withdraw empty ones."""
    touched, notices = [], {}
    for slot in dict.fromkeys(msg.views):
        inst = table.get(slot)
        if inst is None or msg.client not in inst.subscribers:
            log.warning("leave from client %s for unknown subscription %s ignored", msg.client, slot)
            continue
        del inst.subscribers[msg.client]
        touched.append(slot)
        notices[slot] = frozenset(inst.subscribers)
    withdrawn = table._withdraw_empty(touched)
    if touched:
        table.version += 1
    return LeaveResult(tuple(withdrawn), notices)


def expire_soft_state(table: ViewTable, now: float, refresh_interval: float, miss_limit: int) -> ExpiryResult:
    """Drop subscribers silent for more than ``miss_limit`` refresh intervals."""
    if refresh_interval <= 0 or miss_limit < 1:
        raise ValueError("refresh_interval must be > 0 and miss_limit >= 1")
    horizon = miss_limit * refresh_interval
    expired = []
    for inst in table.instances():
        for client, seen in list(inst.subscribers.items()):
            if now - seen > horizon:
                del inst.subscribers[client]
                expired.append((client, inst.slot))
    withdrawn = table._withdraw_empty(s for _, s in expired)
    if expired:
        table.version += 1
    return ExpiryResult(tuple(expired), tuple(withdrawn))
