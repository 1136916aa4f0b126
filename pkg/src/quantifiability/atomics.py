"""Atomic cells, a strictly increasing stamp clock, tickets and a small PRNG.

Python has no hardware compare-and-swap, so each atomic cell guards its value
with its own lock, held only for the duration of one load, store or CAS.  The
data structures built on these cells never hold two cell locks at once and
never wait on another thread while holding one, so the cells stand in for
single-word atomic instructions.
"""

from __future__ import annotations

import threading
import time
from typing import Callable, Optional

MASK64 = (1 << 64) - 1


class AtomicReference:
    """A reference cell with identity-based compare-and-set."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value=None) -> None:
        self._value = value
        self._lock = threading.Lock()

    def get(self):
        with self._lock:
            return self._value

    def set(self, value) -> None:
        with self._lock:
            self._value = value

    def get_and_set(self, value):
        with self._lock:
            old = self._value
            self._value = value
            return old

    def compare_and_set(self, expected, value) -> bool:
        with self._lock:
            if self._value is not expected:
                return False
            self._value = value
            return True

    def compare_and_stamp(self, expected, value, clock: Optional["Clock"]) -> int:
        """CAS that reads ``clock`` inside the same atomic step.

        Returns the stamp (``0`` when ``clock`` is None) on success and ``-1`` on
        failure, so the stamp orders successful CASes on one cell exactly.
        """
        with self._lock:
            if self._value is not expected:
                return -1
            self._value = value
            return clock.now() if clock is not None else 0

    def compare_and_set_with(self, expected, factory: Callable[[int], object], clock: Optional["Clock"]) -> int:
        """Like :meth:`compare_and_stamp` but the new value is built from the stamp."""
        with self._lock:
            if self._value is not expected:
                return -1
            stamp = clock.now() if clock is not None else 0
            self._value = factory(stamp)
            return stamp

    def __repr__(self) -> str:
        return f"AtomicReference({self._value!r})"


class AtomicCounter:
    __slots__ = ("_value", "_lock")

    def __init__(self, value: int = 0) -> None:
        self._value = value
        self._lock = threading.Lock()

    def get(self) -> int:
        with self._lock:
            return self._value

    def get_and_increment(self, d: int = 1) -> int:
        with self._lock:
            old = self._value
            self._value = old + d
            return old

    def increment_and_get(self, d: int = 1) -> int:
        with self._lock:
            self._value += d
            return self._value


class Clock:
    """Globally strictly increasing nanosecond stamps.

    In ``logical`` mode the stamps are 1, 2, 3, ... which makes single-threaded
    runs bit-for-bit reproducible.
    """

    def __init__(self, logical: bool = False) -> None:
        self.logical = logical
        self._last = 0
        self._lock = threading.Lock()

    def now(self) -> int:
        with self._lock:
            if self.logical:
                t = self._last + 1
            else:
                t = max(time.monotonic_ns(), self._last + 1)
            self._last = t
            return t


class Primitives:
    """Factory for the shared-memory cells a structure allocates.

    The race detector substitutes instrumented versions; the structures only
    ever allocate through this interface.
    """

    def reference(self, value=None) -> AtomicReference:
        return AtomicReference(value)

    def node_class(self, cls):
        return cls


DEFAULT_PRIMITIVES = Primitives()


# -- tickets -------------------------------------------------------------------

_PENDING = "pending"
_CANCELLED = "cancelled"


class _Fulfilled:
    __slots__ = ("value", "stamp")

    def __init__(self, value, stamp: int) -> None:
        self.value = value
        self.stamp = stamp


class TicketNotFulfilled(RuntimeError):
    pass


class Ticket:
    """Caller handle for a consumer call: write-once result plus cancellation.

    The state cell moves from pending to either fulfilled (carrying the value)
    or cancelled in a single CAS, so a value is delivered at most once and
    never after a successful cancel.
    """

    __slots__ = ("_state", "invoke_ns", "thread")

    def __init__(self, primitives: Primitives = DEFAULT_PRIMITIVES, invoke_ns: int = 0, thread: int = 0) -> None:
        self._state = primitives.reference(_PENDING)
        self.invoke_ns = invoke_ns
        self.thread = thread

    def fulfill(self, value, stamp: int = 0) -> bool:
        return self._state.compare_and_set(_PENDING, _Fulfilled(value, stamp))

    def cancel(self) -> bool:
        return self._state.compare_and_set(_PENDING, _CANCELLED)

    @property
    def pending(self) -> bool:
        return self._state.get() is _PENDING

    @property
    def fulfilled(self) -> bool:
        return isinstance(self._state.get(), _Fulfilled)

    @property
    def cancelled(self) -> bool:
        return self._state.get() is _CANCELLED

    @property
    def state(self) -> str:
        s = self._state.get()
        return "fulfilled" if isinstance(s, _Fulfilled) else s

    def result(self) -> tuple[object, int]:
        s = self._state.get()
        if not isinstance(s, _Fulfilled):
            raise TicketNotFulfilled(f"ticket is {s}")
        return s.value, s.stamp

    @property
    def value(self):
        return self.result()[0]

    @property
    def stamp(self) -> int:
        return self.result()[1]

    def wait(self, timeout: Optional[float] = None, poll: float = 1e-4):
        """Poll with capped exponential backoff until fulfilled; returns the value."""
        deadline = None if timeout is None else time.monotonic() + timeout
        delay = 0.0
        while True:
            s = self._state.get()
            if isinstance(s, _Fulfilled):
                return s.value
            if s is _CANCELLED:
                raise TicketNotFulfilled("ticket was cancelled")
            if deadline is not None and time.monotonic() >= deadline:
                raise TimeoutError("ticket still pending")
            time.sleep(delay)
            delay = min(poll, delay * 2 or 1e-6)

    def __repr__(self) -> str:
        return f"Ticket({self.state})"


def cancel(ticket: Ticket) -> bool:
    return ticket.cancel()


# -- random tail / sublist selection --------------------------------------------


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = splitmix64(seed) or 0x2545F4914F6CDD1D

    def next(self) -> int:
        x = self.state
        x ^= (x << 13) & MASK64
        x ^= x >> 7
        x ^= (x << 17) & MASK64
        self.state = x
        return x

    def below(self, n: int) -> int:
        return self.next() % n


class ThreadRandom:
    """Per-thread xorshift streams derived from one run seed.

    Threads are numbered in order of first use, so a single-threaded run always
    sees the same stream.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._local = threading.local()
        self._next_id = AtomicCounter()

    def get(self) -> XorShift64:
        rng = getattr(self._local, "rng", None)
        if rng is None:
            n = self._next_id.get_and_increment()
            rng = XorShift64(splitmix64(self.seed ^ (n * 0x9E3779B97F4A7C15 & MASK64)))
            self._local.rng = rng
        return rng
