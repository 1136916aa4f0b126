"""The quantifiable stack.

Items live in a tree hanging off a sentinel root.  Every leaf is referenced by
one slot of a fixed-size ``tails`` array, and an operation works at the leaf
of a randomly chosen slot, so with several slots the structure behaves like a
bundle of stacks that share their bottom.  Consumers never fail: a pop that
finds no item inserts a POP node instead and returns a pending ticket, and a
later push that lands on a POP leaf removes it and fulfils that ticket.  All
live nodes in the tree therefore share one kind (PUSH or POP).

A node is changed only by the thread holding its descriptor.  Claiming a
descriptor is one CAS and releasing it is one store; the release is the
visibility point of the operation.  Insert holds the descriptor of the leaf it
extends; remove holds the descriptors of the leaf and of its parent.

A thread that keeps failing publishes its node as a fork request.  The next
successful inserter of the same kind hangs that node next to its own as a
sibling and gives it a free tail slot, widening the tree where it is
contended.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Optional

from .atomics import DEFAULT_PRIMITIVES, Clock, Primitives, Ticket, ThreadRandom

PUSH = "PUSH"
POP = "POP"
ROOT = "ROOT"

FAIL_THRESHOLD = 8
FORK_PATIENCE = 4


@dataclass(frozen=True)
class QStackConfig:
    width: int = 0
    fail_threshold: int = FAIL_THRESHOLD
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width == 0:
            object.__setattr__(self, "width", os.cpu_count() or 1)
        if self.width < 1:
            raise ValueError("width must be at least 1")
        if self.fail_threshold < 1:
            raise ValueError("fail_threshold must be at least 1")


class Descriptor:
    __slots__ = ("value", "op", "active")

    def __init__(self, value, op, active) -> None:
        self.value = value
        self.op = op
        self.active = active


class Node:
    __slots__ = ("value", "op", "ticket", "prev", "nexts", "desc")

    def __init__(self, value, op, ticket, primitives: Primitives) -> None:
        self.value = value
        self.op = op
        self.ticket = ticket
        self.prev = None
        self.nexts = primitives.reference(())
        self.desc = primitives.reference(None)

    def __repr__(self) -> str:
        return f"Node({self.op}, {self.value!r})"


# fork request states
WAITING = "waiting"
TAKEN = "taken"
ATTACHED = "attached"
DECLINED = "declined"
WITHDRAWN = "withdrawn"


class ForkRequest:
    __slots__ = ("node", "state", "stamp")

    def __init__(self, node: Node, primitives: Primitives) -> None:
        self.node = node
        self.state = primitives.reference(WAITING)
        self.stamp = primitives.reference(0)


class QStack:
    def __init__(
        self,
        config: Optional[QStackConfig] = None,
        *,
        clock: Optional[Clock] = None,
        primitives: Primitives = DEFAULT_PRIMITIVES,
    ) -> None:
        self.config = config or QStackConfig()
        self.clock = clock
        self._prim = primitives
        self._node = primitives.node_class(Node)
        self._desc = primitives.node_class(Descriptor)
        self._fork = primitives.node_class(ForkRequest)
        self.root = self._node(None, ROOT, None, primitives)
        self.tails = [primitives.reference(None) for _ in range(self.config.width)]
        self.tails[0].set(self.root)
        self.fork_request = primitives.reference(None)
        self._random = ThreadRandom(self.config.seed)

    # -- descriptors -----------------------------------------------------------

    def _claim(self, node: Node, value, op) -> Optional[Descriptor]:
        old = node.desc.get()
        if old is not None and old.active.get():
            return None
        desc = self._desc(value, op, self._prim.reference(True))
        return desc if node.desc.compare_and_set(old, desc) else None

    def _release(self, desc: Descriptor) -> int:
        # visibility point
        stamp = self.clock.now() if self.clock is not None else 0
        desc.active.set(False)
        return stamp

    # -- tails -----------------------------------------------------------------

    def _random_tail(self) -> tuple[int, Node]:
        while True:
            occupied = []
            for i, slot in enumerate(self.tails):
                node = slot.get()
                if node is not None:
                    occupied.append((i, node))
            # slots are read one by one, so a fork and a prune racing the scan
            # can hide every occupied slot from it; look again
            if occupied:
                return occupied[self._random.get().below(len(occupied))]

    def _count(self, node: Node) -> int:
        return sum(1 for slot in self.tails if slot.get() is node)

    def _valid_leaf(self, cur: Node, index: int) -> bool:
        """With cur's descriptor held: is tails[index] a sole reference to leaf cur?

        Drops the slot when it points at an interior node or shares its node
        with another slot.  Slots only stop pointing at a node under that
        node's descriptor, so the check cannot race with another pruner.
        """
        if self.tails[index].get() is not cur:
            return False
        if not cur.nexts.get() and self._count(cur) == 1:
            return True
        if sum(1 for slot in self.tails if slot.get() is not None) > 1:
            self.tails[index].compare_and_set(cur, None)
        return False

    # -- structural steps --------------------------------------------------------

    def insert(self, cur: Node, elem: Node, index: int) -> int:
        """Hang ``elem`` below leaf ``cur``; returns the visibility stamp or -1."""
        desc = self._claim(cur, elem.value, elem.op)
        if desc is None:
            return -1
        if not self._valid_leaf(cur, index):
            self._release(desc)
            return -1
        elem.prev = cur
        cur.nexts.set((elem,))
        self.tails[index].set(elem)
        req = self.fork_request.get()
        attached = req is not None and self._help_fork(cur, elem, req)
        stamp = self.clock.now() if self.clock is not None else 0
        if attached:
            req.stamp.set(stamp)
        desc.active.set(False)
        return stamp

    def _help_fork(self, cur: Node, elem: Node, req: ForkRequest) -> bool:
        node = req.node
        if node.op != elem.op or node is elem:
            return False
        if not req.state.compare_and_set(WAITING, TAKEN):
            return False
        node.prev = cur
        for slot in self.tails:
            if slot.get() is None and slot.compare_and_set(None, node):
                cur.nexts.set(cur.nexts.get() + (node,))
                req.state.set(ATTACHED)
                break
        else:
            req.state.set(DECLINED)
        self.fork_request.compare_and_set(req, None)
        return req.state.get() is ATTACHED

    def remove(self, cur: Node, index: int) -> tuple[int, Optional[Node]]:
        """Detach leaf ``cur``; returns (visibility stamp, cur) or (-1, None)."""
        if cur.op == ROOT:
            return -1, None
        desc = self._claim(cur, cur.value, cur.op)
        if desc is None:
            return -1, None
        if not self._valid_leaf(cur, index):
            self._release(desc)
            return -1, None
        prev = cur.prev
        pdesc = self._claim(prev, cur.value, cur.op)
        if pdesc is None:
            self._release(desc)
            return -1, None
        prev.nexts.set(tuple(n for n in prev.nexts.get() if n is not cur))
        self.tails[index].set(prev)
        pdesc.active.set(False)
        return self._release(desc), cur

    # -- operations --------------------------------------------------------------

    def push(self, value) -> int:
        """Push ``value``; returns the stamp of its visibility point."""
        elem = self._node(value, PUSH, None, self._prim)
        loops = 0
        while True:
            index, cur = self._random_tail()
            if cur.op == POP:
                stamp, node = self.remove(cur, index)
                if node is not None and node.ticket.fulfill(value, stamp):
                    return stamp
            else:
                stamp = self.insert(cur, elem, index)
                if stamp >= 0:
                    return stamp
            loops += 1
            time.sleep(0)  # let a preempted descriptor holder run
            if loops > self.config.fail_threshold:
                stamp = self._request_fork(elem)
                if stamp >= 0:
                    return stamp
                loops = 0

    def pop(self) -> Ticket:
        """Pop an item, or leave a pending request for the next push."""
        ticket = Ticket(self._prim)
        elem = self._node(None, POP, ticket, self._prim)
        loops = 0
        while True:
            index, cur = self._random_tail()
            if cur.op == PUSH:
                stamp, node = self.remove(cur, index)
                if node is not None:
                    ticket.fulfill(node.value, stamp)
                    return ticket
            elif self.insert(cur, elem, index) >= 0:
                return ticket
            loops += 1
            time.sleep(0)  # let a preempted descriptor holder run
            if loops > self.config.fail_threshold:
                if self._request_fork(elem) >= 0:
                    return ticket
                loops = 0

    def _request_fork(self, elem: Node) -> int:
        """Offer ``elem`` for attachment by another inserter; stamp if attached, else -1."""
        req = self._fork(elem, self._prim)
        if not self.fork_request.compare_and_set(None, req):
            return -1
        for _ in range(FORK_PATIENCE):
            time.sleep(0)
            if req.state.get() is not WAITING:
                break
        if req.state.compare_and_set(WAITING, WITHDRAWN):
            self.fork_request.compare_and_set(req, None)
            return -1
        while req.state.get() is TAKEN:
            time.sleep(0)
        if req.state.get() is ATTACHED:
            while True:
                stamp = req.stamp.get()
                if stamp or self.clock is None:
                    return stamp
                time.sleep(0)
        return -1

    # -- inspection (quiescent use only) -----------------------------------------

    def nodes(self) -> list[Node]:
        out = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(n.nexts.get())
        return out

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes() if not n.nexts.get()]

    def items(self) -> list:
        return [n.value for n in self.nodes() if n.op == PUSH]

    def waiting(self) -> list[Ticket]:
        return [n.ticket for n in self.nodes() if n.op == POP and n.ticket.pending]


def validate_tree(stack: QStack) -> list[str]:
    """Structural invariants of a quiescent stack; returns a list of problems."""
    problems = []
    nodes = stack.nodes()
    tails = [slot.get() for slot in stack.tails]
    occupied = [t for t in tails if t is not None]
    if not occupied:
        problems.append("no occupied tail slot")
    kinds = {n.op for n in nodes if n.op != ROOT}
    if len(kinds) > 1:
        problems.append(f"mixed node kinds {sorted(kinds)}")
    seen = set()
    for n in nodes:
        if id(n) in seen:
            problems.append(f"{n!r} reachable twice")
        seen.add(id(n))
        for child in n.nexts.get():
            if child.prev is not n:
                problems.append(f"{child!r}.prev does not point at its parent")
        d = n.desc.get()
        if d is not None and d.active.get():
            problems.append(f"{n!r} still holds an active descriptor")
    for leaf in (n for n in nodes if not n.nexts.get()):
        refs = sum(1 for t in occupied if t is leaf)
        if refs != 1:
            problems.append(f"leaf {leaf!r} referenced by {refs} tail slots")
    for t in occupied:
        if id(t) not in seen:
            problems.append(f"tail slot points at detached {t!r}")
    return problems
