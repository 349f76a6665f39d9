"""Group management step by step: join, share, leave and reorganize.

Run with ``python notebooks/03_protocol_walkthrough.py``.
"""

from dibrcast.model import Cell, Client, ExplicitLossModel
from dibrcast.protocol import (
    LeaveMessage,
    ViewTable,
    decode,
    encode,
    handle_join,
    handle_leave,
    reorganize,
    select_views,
)

RATES = (6.5, 13.0)
cell = Cell(channels=2, rates=RATES, video_rate=2e6)
M, R = 8, 2
clients = {
    cid: Client(cid, frozenset({1, 2}), frozenset(RATES), threshold=thr)
    for cid, thr in [(1, 0.05), (2, 0.05), (3, 0.2)]
}
model = ExplicitLossModel.per_rate(list(clients.values()), {6.5: 0.1, 13.0: 0.25})
table = ViewTable(cell)


def show(title):
    print(f"\n{title}: {len(table)} instances, {table.channel_time_ms():.2f} ms per frame")
    for inst in table.instances():
        print(f"  view {inst.slot.view} ch {inst.slot.channel} @ {inst.slot.rate:g} Mbps <- {sorted(inst.subscribers)}")


def join(cid, desired):
    sel = select_views(clients[cid], desired, table, R, model, M)
    msg = decode(encode(sel.join(cid), RATES), RATES)  # through the wire format
    handle_join(table, msg, now=0)
    print(f"client {cid} wants view {desired}: failure {sel.predicted_failure:.4f}, created {len(sel.created)}")


join(1, 4)
show("after client 1")
join(2, 5)
show("after client 2")
join(3, 4)
show("after client 3 (shares an instance of view 4)")

gone = table.subscriptions(1)
handle_leave(table, LeaveMessage(1, tuple(gone)), now=1)
show("client 1 left")

changed = False
for cid, desired in [(2, 5), (3, 4)]:
    for slot in table.subscriptions(cid):
        if slot.view != desired:
            plan = reorganize(clients[cid], desired, slot.view, table, R, model, M, now=1)
            if plan is not None:
                handle_leave(table, plan.leave, now=1)
                if plan.join is not None:
                    handle_join(table, plan.join, now=1)
                print(f"client {cid} dropped view {slot.view}, failure now {plan.predicted_failure:.4f}")
                changed = True
if not changed:
    print("\nno remaining client holds a reference view it could give up")
show("after reorganization")
