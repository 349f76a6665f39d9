"""MVGMP control messages and their byte framing.

Join/Leave frame (big-endian)::

    offset size field
    0      1    type            1 = Join, 2 = Leave
    1      4    client id       unsigned
    5      2    count           number of view records, >= 1
    7      4*n  records         view (2), channel (1), rate index (1)

ViewTable advertisement frame::

    0      1    type            3
    1      4    table version
    5      2    count           number of instance records
    7      10*n records         view (2), channel (1), rate index (1),
                                IPv4 group address (4), subscriber count (2)

Rate indices refer to the cell's ordered rate set. Times are not carried on
the wire; the receiver stamps arrival.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, field
from typing import Sequence

from ..model import DEFAULT_RATES, Slot

JOIN = 1
LEAVE = 2
TABLE = 3

_HEAD = struct.Struct(">BIH")
_REC = struct.Struct(">HBB")
_TABLE_REC = struct.Struct(">HBBIH")


class MessageError(ValueError):
    """Malformed message or frame."""


def _slots(views) -> tuple[Slot, ...]:
    out = tuple(Slot(int(v), int(c), float(r)) for v, c, r in views)
    if not out:
        raise MessageError("a message must list at least one view instance")
    return out


@dataclass(frozen=True)
class JoinMessage:
    """Full list of instances the client wants to receive (replaces earlier joins)."""

    client: int
    views: tuple[Slot, ...]
    issued_at: float = field(default=0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "views", _slots(self.views))


@dataclass(frozen=True)
class LeaveMessage:
    client: int
    views: tuple[Slot, ...]
    issued_at: float = field(default=0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "views", _slots(self.views))


@dataclass(frozen=True)
class AdvertEntry:
    slot: Slot
    address: str
    subscribers: int


@dataclass(frozen=True)
class TableAdvert:
    version: int
    entries: tuple[AdvertEntry, ...]


def _rate_index(rate: float, rates: Sequence[float]) -> int:
    try:
        return list(rates).index(float(rate))
    except ValueError:
        raise MessageError(f"rate {rate} not in rate set") from None


def _rate(index: int, rates: Sequence[float]) -> float:
    if index >= len(rates):
        raise MessageError(f"rate index {index} out of range")
    return float(rates[index])


def _pack_slot(slot: Slot, rates: Sequence[float]) -> tuple[int, int, int]:
    if not 0 <= slot.view <= 0xFFFF or not 0 <= slot.channel <= 0xFF:
        raise MessageError(f"{slot} does not fit the frame layout")
    return slot.view, slot.channel, _rate_index(slot.rate, rates)


def encode(msg: JoinMessage | LeaveMessage, rates: Sequence[float] = DEFAULT_RATES) -> bytes:
    if isinstance(msg, JoinMessage):
        kind = JOIN
    elif isinstance(msg, LeaveMessage):
        kind = LEAVE
    else:
        raise MessageError(f"cannot encode {type(msg).__name__}")
    if not 0 <= msg.client <= 0xFFFFFFFF:
        raise MessageError("client id must fit in 32 bits")
    if len(msg.views) > 0xFFFF:
        raise MessageError("too many view records")
    out = bytearray(_HEAD.pack(kind, msg.client, len(msg.views)))
    for slot in msg.views:
        out += _REC.pack(*_pack_slot(slot, rates))
    return bytes(out)


def decode(frame: bytes, rates: Sequence[float] = DEFAULT_RATES) -> JoinMessage | LeaveMessage:
    if len(frame) < _HEAD.size:
        raise MessageError("truncated header")
    kind, client, count = _HEAD.unpack_from(frame)
    if kind not in (JOIN, LEAVE):
        raise MessageError(f"unknown message type {kind}")
    if count == 0:
        raise MessageError("empty view list")
    expected = _HEAD.size + count * _REC.size
    if len(frame) != expected:
        raise MessageError(f"frame length {len(frame)} != {expected}")
    views = []
    for i in range(count):
        view, channel, ri = _REC.unpack_from(frame, _HEAD.size + i * _REC.size)
        views.append(Slot(view, channel, _rate(ri, rates)))
    cls = JoinMessage if kind == JOIN else LeaveMessage
    return cls(client, tuple(views))


def encode_table(advert: TableAdvert, rates: Sequence[float] = DEFAULT_RATES) -> bytes:
    out = bytearray(_HEAD.pack(TABLE, advert.version & 0xFFFFFFFF, len(advert.entries)))
    for e in advert.entries:
        view, ch, ri = _pack_slot(e.slot, rates)
        addr = int(ipaddress.IPv4Address(e.address))
        out += _TABLE_REC.pack(view, ch, ri, addr, min(e.subscribers, 0xFFFF))
    return bytes(out)


def decode_table(frame: bytes, rates: Sequence[float] = DEFAULT_RATES) -> TableAdvert:
    if len(frame) < _HEAD.size:
        raise MessageError("truncated header")
    kind, version, count = _HEAD.unpack_from(frame)
    if kind != TABLE:
        raise MessageError(f"not a table advertisement (type {kind})")
    expected = _HEAD.size + count * _TABLE_REC.size
    if len(frame) != expected:
        raise MessageError(f"frame length {len(frame)} != {expected}")
    entries = []
    for i in range(count):
        view, ch, ri, addr, subs = _TABLE_REC.unpack_from(frame, _HEAD.size + i * _TABLE_REC.size)
        entries.append(AdvertEntry(Slot(view, ch, _rate(ri, rates)), str(ipaddress.IPv4Address(addr)), subs))
    return TableAdvert(version, tuple(entries))
