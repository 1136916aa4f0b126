"""Comparison structures with conditional consumers.

A Treiber stack and a two-CAS linked queue.  Their consumers return ``None``
on an empty structure instead of waiting, which is exactly the behaviour the
quantifiable structures avoid.  Producers return the stamp of their linking
CAS; consumers return ``(value or None, stamp)``.
"""

from __future__ import annotations

from typing import Optional

from .atomics import DEFAULT_PRIMITIVES, Clock, Primitives


class TreiberNode:
    __slots__ = ("value", "next")

    def __init__(self, value, next) -> None:
        self.value = value
        self.next = next


class TreiberStack:
    def __init__(self, *, clock: Optional[Clock] = None, primitives: Primitives = DEFAULT_PRIMITIVES) -> None:
        self.clock = clock
        self._node = primitives.node_class(TreiberNode)
        self.top = primitives.reference(None)

    def t_push(self, value) -> int:
        while True:
            old = self.top.get()
            node = self._node(value, old)
            stamp = self.top.compare_and_stamp(old, node, self.clock)
            if stamp >= 0:
                return stamp

    def t_pop(self) -> tuple[Optional[object], int]:
        while True:
            old = self.top.get()
            if old is None:
                return None, self._now()
            stamp = self.top.compare_and_stamp(old, old.next, self.clock)
            if stamp >= 0:
                return old.value, stamp

    def _now(self) -> int:
        return self.clock.now() if self.clock is not None else 0

    def items(self) -> list:
        out = []
        n = self.top.get()
        while n is not None:
            out.append(n.value)
            n = n.next
        return out


class QueueNode:
    __slots__ = ("value", "next")

    def __init__(self, value, primitives: Primitives) -> None:
        self.value = value
        self.next = primitives.reference(None)


class BaselineQueue:
    def __init__(self, *, clock: Optional[Clock] = None, primitives: Primitives = DEFAULT_PRIMITIVES) -> None:
        self.clock = clock
        self._prim = primitives
        self._node = primitives.node_class(QueueNode)
        dummy = self._node(None, primitives)
        self.head = primitives.reference(dummy)
        self.tail = primitives.reference(dummy)

    def b_enqueue(self, value) -> int:
        node = self._node(value, self._prim)
        while True:
            t = self.tail.get()
            n = t.next.get()
            if n is not None:
                self.tail.compare_and_set(t, n)
                continue
            stamp = t.next.compare_and_stamp(None, node, self.clock)
            if stamp >= 0:
                self.tail.compare_and_set(t, node)
                return stamp

    def b_dequeue(self) -> tuple[Optional[object], int]:
        while True:
            h = self.head.get()
            t = self.tail.get()
            n = h.next.get()
            if n is None:
                return None, self.clock.now() if self.clock is not None else 0
            if h is t:
                self.tail.compare_and_set(t, n)
                continue
            stamp = self.head.compare_and_stamp(h, n, self.clock)
            if stamp >= 0:
                return n.value, stamp

    def items(self) -> list:
        out = []
        n = self.head.get().next.get()
        while n is not None:
            out.append(n.value)
            n = n.next.get()
        return out
