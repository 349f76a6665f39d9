"""Multi-view group management: ViewTable, Join/Leave handling, view selection."""

from .messages import (
    AdvertEntry,
    JoinMessage,
    LeaveMessage,
    MessageError,
    TableAdvert,
    decode,
    decode_table,
    encode,
    encode_table,
)
from .selection import Reorganization, ViewSelection, reorganize, reselect, select_views
from .table import (
    ExpiryResult,
    JoinResult,
    LeaveResult,
    ViewInstance,
    ViewTable,
    expire_soft_state,
    handle_join,
    handle_leave,
)

__all__ = [
    "AdvertEntry",
    "ExpiryResult",
    "JoinMessage",
    "JoinResult",
    "LeaveMessage",
    "LeaveResult",
    "MessageError",
    "Reorganization",
    "TableAdvert",
    "ViewInstance",
    "ViewSelection",
    "ViewTable",
    "decode",
    "decode_table",
    "encode",
    "encode_table",
    "expire_soft_state",
    "handle_join",
    "handle_leave",
    "reorganize",
    "reselect",
    "select_views",
]
