"""The quantifiable queue.

An array of ``width`` linked sublists, each a dual queue: a dummy-headed
chain whose unmatched nodes are either all ENQ nodes (items) or all DEQ nodes
(waiting dequeues).  An arriving operation picks a sublist at random.  If the
sublist's oldest unmatched node is of the opposite kind it matches that node;
otherwise it appends its own node after the tail.  The linking CAS fails if
anything was appended after the tail it read, and unmatched nodes never come
back, so every sublist stays homogeneous without extra synchronisation.

Sublists are independent, so one of them can hold waiting dequeues while
another holds items.  To rule that out at quiescence, every append is stamped
inside its linking CAS, and after appending an operation looks at the oldest
unmatched node of every sublist.  If one of them is of the opposite kind and
older than its own node, the younger node withdraws itself and matches the
older one instead.  Of any two unmatched opposite nodes the younger always
sees the older, so no such pair survives once the queue is quiescent.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from .atomics import DEFAULT_PRIMITIVES, Clock, Primitives, Ticket, ThreadRandom

ENQ = "ENQ"
DEQ = "DEQ"
DUMMY = "DUMMY"

LIVE = "live"
TAKEN = "taken"
RETRACTED = "retracted"


@dataclass(frozen=True)
class QQueueConfig:
    width: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width == 0:
            object.__setattr__(self, "width", os.cpu_count() or 1)
        if self.width < 1:
            raise ValueError("width must be at least 1")


class QNode:
    __slots__ = ("value", "op", "ticket", "stamp", "next", "state")

    def __init__(self, value, op, ticket, primitives: Primitives, state=LIVE) -> None:
        self.value = value
        self.op = op
        self.ticket = ticket
        self.stamp = 0
        self.next = primitives.reference(None)
        self.state = primitives.reference(state)

    def __repr__(self) -> str:
        return f"QNode({self.op}, {self.value!r})"


class Sublist:
    __slots__ = ("head", "tail")

    def __init__(self, dummy: QNode, primitives: Primitives) -> None:
        self.head = primitives.reference(dummy)
        self.tail = primitives.reference(dummy)


class QQueue:
    def __init__(
        self,
        config: Optional[QQueueConfig] = None,
        *,
        clock: Optional[Clock] = None,
        primitives: Primitives = DEFAULT_PRIMITIVES,
    ) -> None:
        self.config = config or QQueueConfig()
        # appends must be totally ordered even when the caller wants no timing
        self.clock = clock if clock is not None else Clock(logical=True)
        self._prim = primitives
        self._node = primitives.node_class(QNode)
        self.sublists = [
            Sublist(self._node(None, DUMMY, None, primitives, state=TAKEN), primitives)
            for _ in range(self.config.width)
        ]
        self._random = ThreadRandom(self.config.seed)

    def _pick(self) -> Sublist:
        return self.sublists[self._random.get().below(len(self.sublists))]

    def _first_live(self, sub: Sublist) -> Optional[QNode]:
        """Oldest unmatched node of ``sub``, advancing its head past matched ones."""
        h = sub.head.get()
        n = h.next.get()
        while n is not None:
            if n.state.get() is LIVE:
                return n
            if sub.head.compare_and_set(h, n):
                h = n
            else:
                h = sub.head.get()
            n = h.next.get()
        return None

    def _stamp_into(self, node: QNode):
        def link(stamp: int) -> QNode:
            node.stamp = stamp
            return node

        return link

    def _offer(self, node: QNode) -> int:
        """Match or append ``node``.

        Returns the stamp of the step that completed the call.  For an ENQ the
        value reached someone or was linked; for a DEQ ``node.ticket`` was
        fulfilled or the node was linked and left waiting.
        """
        while True:
            sub = self._pick()
            t = sub.tail.get()
            n = t.next.get()
            if n is not None:
                sub.tail.compare_and_set(t, n)
                continue
            other = self._first_live(sub)
            if other is None or other.op == node.op:
                stamp = t.next.compare_and_set_with(None, self._stamp_into(node), self.clock)
                if stamp < 0:
                    continue
                sub.tail.compare_and_set(t, node)
                return self._settle(node, stamp)
            stamp = self._match(node, other)
            if stamp >= 0:
                return stamp

    def _match(self, node: QNode, other: QNode) -> int:
        """Claim the opposite node ``other`` for the call carried by ``node``; -1 if lost."""
        stamp = other.state.compare_and_stamp(LIVE, TAKEN, self.clock)
        if stamp < 0:
            return -1
        if node.op == ENQ:
            # a cancelled waiter swallows nothing; keep looking
            return stamp if other.ticket.fulfill(node.value, stamp) else -1
        node.ticket.fulfill(other.value, stamp)
        return stamp

    def _settle(self, node: QNode, stamp: int) -> int:
        """After appending: yield to any older unmatched node of the opposite kind."""
        older = None
        for sub in self.sublists:
            f = self._first_live(sub)
            if f is not None and f.op != node.op and f.stamp < node.stamp:
                older = f
                break
        if older is None:
            return stamp
        if not node.state.compare_and_set(LIVE, RETRACTED):
            return stamp  # already matched by someone else
        got = self._match(node, older)
        if got >= 0:
            return got
        return self._offer(self._node(node.value, node.op, node.ticket, self._prim))

    def enqueue(self, value) -> int:
        """Enqueue ``value``; returns the stamp of its visibility point."""
        return self._offer(self._node(value, ENQ, None, self._prim))

    def dequeue(self) -> Ticket:
        """Dequeue an item, or leave a waiting request for a future enqueue."""
        ticket = Ticket(self._prim)
        self._offer(self._node(None, DEQ, ticket, self._prim))
        return ticket

    # -- inspection (quiescent use only) -----------------------------------------

    def live_nodes(self, sub: Sublist) -> list[QNode]:
        out = []
        n = sub.head.get().next.get()
        while n is not None:
            if n.state.get() is LIVE:
                out.append(n)
            n = n.next.get()
        return out

    def items(self) -> list:
        return [n.value for sub in self.sublists for n in self.live_nodes(sub) if n.op == ENQ]

    def waiting(self) -> list[Ticket]:
        return [
            n.ticket
            for sub in self.sublists
            for n in self.live_nodes(sub)
            if n.op == DEQ and n.ticket.pending
        ]
