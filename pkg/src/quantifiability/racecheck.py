"""A vector-clock happens-before race detector for the shared-memory structures.

Pass a :class:`RaceDetector` as the ``primitives`` of a structure.  Every
atomic cell it allocates then carries a synchronisation clock (loads acquire,
stores release, a successful CAS does both), and every node class it uses is
replaced by a subclass whose slot accesses are checked.  Two accesses to the
same node field race when at least one is a write and neither happens before
the other.

Threads started by a harness should call :meth:`fork` in the parent,
:meth:`adopt` first thing in the child and :meth:`finish` last thing in the
child, followed by :meth:`join` in the parent, so thread start and join order
memory the way they do in the runtime.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from .atomics import AtomicReference, Primitives

VectorClock = dict


def _join_into(target: dict, other: dict) -> None:
    for t, c in other.items():
        if target.get(t, 0) < c:
            target[t] = c


@dataclass(frozen=True)
class Race:
    node: str
    field: str
    kind: str  # "write-write", "read-write" or "write-read"
    first_thread: int
    second_thread: int

    def __str__(self) -> str:
        return f"{self.kind} race on {self.node}.{self.field} between threads {self.first_thread} and {self.second_thread}"


class _ThreadState:
    __slots__ = ("tid", "vc")

    def __init__(self, tid: int) -> None:
        self.tid = tid
        self.vc = {tid: 1}


class _Shadow:
    __slots__ = ("w_tid", "w_clk", "reads")

    def __init__(self) -> None:
        self.w_tid = -1
        self.w_clk = 0
        self.reads: dict = {}


class CheckedReference(AtomicReference):
    __slots__ = ("_det", "_vc")

    def __init__(self, detector: "RaceDetector", value=None) -> None:
        super().__init__(value)
        self._det = detector
        self._vc: dict = {}

    def get(self):
        with self._lock:
            self._det._acquire(self._vc)
            return self._value

    def set(self, value) -> None:
        with self._lock:
            self._value = value
            self._det._release(self._vc)

    def get_and_set(self, value):
        with self._lock:
            self._det._acquire(self._vc)
            old = self._value
            self._value = value
            self._det._release(self._vc)
            return old

    def compare_and_set(self, expected, value) -> bool:
        with self._lock:
            self._det._acquire(self._vc)
            if self._value is not expected:
                return False
            self._value = value
            self._det._release(self._vc)
            return True

    def compare_and_stamp(self, expected, value, clock) -> int:
        with self._lock:
            self._det._acquire(self._vc)
            if self._value is not expected:
                return -1
            self._value = value
            self._det._release(self._vc)
            return clock.now() if clock is not None else 0

    def compare_and_set_with(self, expected, factory, clock) -> int:
        with self._lock:
            self._det._acquire(self._vc)
            if self._value is not expected:
                return -1
            stamp = clock.now() if clock is not None else 0
            self._value = factory(stamp)
            self._det._release(self._vc)
            return stamp


class RaceDetector(Primitives):
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._local = threading.local()
        self._next_tid = 0
        self._shadow: dict = {}
        self._keep: list = []  # pins checked objects so ids are not reused
        self._classes: dict = {}
        self._finished: list = []
        self.races: list[Race] = []
        self.accesses = 0

    # -- thread bookkeeping ------------------------------------------------------

    def _me(self) -> _ThreadState:
        st = getattr(self._local, "st", None)
        if st is None:
            with self._lock:
                st = _ThreadState(self._next_tid)
                self._next_tid += 1
            self._local.st = st
        return st

    def fork(self) -> dict:
        st = self._me()
        with self._lock:
            token = dict(st.vc)
            st.vc[st.tid] += 1
        return token

    def adopt(self, token: dict) -> None:
        st = self._me()
        with self._lock:
            _join_into(st.vc, token)

    def finish(self) -> None:
        st = self._me()
        with self._lock:
            self._finished.append(dict(st.vc))
            st.vc[st.tid] += 1

    def join(self) -> None:
        """Order everything the finished threads did before the caller's next step."""
        st = self._me()
        with self._lock:
            for vc in self._finished:
                _join_into(st.vc, vc)
            self._finished.clear()

    # -- synchronisation ---------------------------------------------------------

    def _acquire(self, cell_vc: dict) -> None:
        st = self._me()
        with self._lock:
            _join_into(st.vc, cell_vc)

    def _release(self, cell_vc: dict) -> None:
        st = self._me()
        with self._lock:
            _join_into(cell_vc, st.vc)
            st.vc[st.tid] += 1

    def reference(self, value=None) -> CheckedReference:
        return CheckedReference(self, value)

    # -- plain field accesses ----------------------------------------------------

    def _access(self, obj, name: str, write: bool) -> None:
        st = self._me()
        t = st.tid
        vc = st.vc
        with self._lock:
            self.accesses += 1
            key = (id(obj), name)
            sh = self._shadow.get(key)
            if sh is None:
                sh = self._shadow[key] = _Shadow()
            if sh.w_tid >= 0 and sh.w_tid != t and sh.w_clk > vc.get(sh.w_tid, 0):
                self._report(obj, name, "write-write" if write else "write-read", sh.w_tid, t)
            if write:
                for r_tid, r_clk in sh.reads.items():
                    if r_tid != t and r_clk > vc.get(r_tid, 0):
                        self._report(obj, name, "read-write", r_tid, t)
                sh.w_tid = t
                sh.w_clk = vc[t]
                sh.reads = {}
            else:
                sh.reads[t] = vc[t]

    def _report(self, obj, name: str, kind: str, first: int, second: int) -> None:
        self.races.append(Race(type(obj).__name__, name, kind, first, second))

    def node_class(self, cls):
        checked = self._classes.get(cls)
        if checked is None:
            checked = self._classes[cls] = self._instrument(cls)
        return checked

    def _instrument(self, cls):
        det = self
        namespace: dict = {"__slots__": ()}
        for name in cls.__slots__:
            slot = cls.__dict__[name]

            def getter(obj, _slot=slot, _name=name):
                det._access(obj, _name, False)
                return _slot.__get__(obj, cls)

            def setter(obj, value, _slot=slot, _name=name):
                det._access(obj, _name, True)
                _slot.__set__(obj, value)

            namespace[name] = property(getter, setter)

        original_init = cls.__init__

        def __init__(obj, *args, **kwargs):
            with det._lock:
                det._keep.append(obj)
            original_init(obj, *args, **kwargs)

        namespace["__init__"] = __init__
        return type(f"Checked{cls.__name__}", (cls,), namespace)

    def report(self) -> Optional[str]:
        if not self.races:
            return None
        lines = [str(r) for r in self.races[:20]]
        if len(self.races) > 20:
            lines.append(f"... and {len(self.races) - 20} more")
        return "\n".join(lines)
