"""Method-call records, configuration indexing, recording, and the history file format.

A history is a multiset of completed (and possibly pending) method calls.
Each call touches one or two *configurations*, i.e. (object, item) pairs;
the :class:`Basis` assigns every observed configuration a dense index so the
verifier can work on flat integer vectors.
"""

from __future__ import annotations

import enum
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

HEADER = "seq,thread,kind,object,item_in,item_out,prev,invoke_ns,response_ns"
INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_INT_RE = re.compile(r"-?[0-9]+\Z")
_OBJECT_RE = re.compile(r"[A-Za-z0-9_]+\Z")
# Reserved for non-integer payloads in a later format revision.
_STRING_ESCAPE = "s:"


class MethodKind(enum.Enum):
    PRODUCER = "PROD"
    CONSUMER = "CONS"
    READER = "READ"
    WRITER = "WRIT"


PRODUCER = MethodKind.PRODUCER
CONSUMER = MethodKind.CONSUMER
READER = MethodKind.READER
WRITER = MethodKind.WRITER


class MalformedCallError(ValueError):
    """A method call whose payload fields do not match its kind."""


class MethodCall(NamedTuple):
    seq: int
    thread: int
    kind: MethodKind
    object: str
    item_in: Optional[int] = None
    item_out: Optional[int] = None
    prev: Optional[int] = None
    invoke_ns: int = 0
    response_ns: Optional[int] = None

    @property
    def pending(self) -> bool:
        return self.response_ns is None

    def configurations(self) -> tuple[tuple[str, Optional[int]], ...]:
        """(object, item) pairs this call touches, input side first."""
        k = self.kind
        if k is PRODUCER:
            return ((self.object, self.item_in),)
        if k is WRITER:
            return ((self.object, self.item_in), (self.object, self.prev))
        return ((self.object, self.item_out),)


def validate_call(call: MethodCall) -> None:
    """Raise :class:`MalformedCallError` if payload presence disagrees with the kind.

    A completed consumer without ``item_out`` is accepted: it is the record of a
    conditional consumer that returned nothing (baseline structures only).
    """
    k = call.kind
    if k is PRODUCER:
        ok = call.item_in is not None and call.item_out is None and call.prev is None
    elif k is WRITER:
        ok = call.item_in is not None and call.prev is not None and call.item_out is None
    elif k is READER:
        ok = call.item_out is not None and call.item_in is None and call.prev is None
    else:
        ok = call.item_in is None and call.prev is None
    if not ok:
        raise MalformedCallError(f"call seq={call.seq}: payload fields do not match kind {k.value}")
    if call.response_ns is not None and call.invoke_ns > call.response_ns:
        raise MalformedCallError(f"call seq={call.seq}: invoke_ns > response_ns")


class Basis:
    """Dense, insertion-ordered indexing of (object, item) configurations."""

    __slots__ = ("map", "reverse")

    def __init__(self, configurations: Iterable[tuple[str, Optional[int]]] = ()) -> None:
        self.map: dict[tuple[str, Optional[int]], int] = {}
        self.reverse: list[tuple[str, Optional[int]]] = []
        for cfg in configurations:
            self.index(cfg[0], cfg[1])

    @property
    def count(self) -> int:
        return len(self.reverse)

    def index(self, obj: str, item: Optional[int]) -> int:
        key = (obj, item)
        j = self.map.get(key)
        if j is None:
            j = len(self.reverse)
            self.map[key] = j
            self.reverse.append(key)
        return j

    def lookup(self, obj: str, item: Optional[int]) -> Optional[int]:
        return self.map.get((obj, item))

    def __len__(self) -> int:
        return len(self.reverse)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Basis) and self.reverse == other.reverse

    def __repr__(self) -> str:
        return f"Basis({self.reverse!r})"


def params_to_index(basis: Basis, obj: str, item: Optional[int]) -> int:
    """Index of ``(obj, item)``; the first encounter allocates the next free slot."""
    return basis.index(obj, item)


def build_basis(calls: Iterable[MethodCall]) -> Basis:
    basis = Basis()
    index = basis.index
    for call in calls:
        for obj, item in call.configurations():
            if item is None and call.response_ns is None:
                continue  # pending consumer/reader: output not known yet
            index(obj, item)
    return basis


@dataclass(frozen=True)
class History:
    calls: tuple[MethodCall, ...]
    basis: Basis = field(compare=False)

    @classmethod
    def of(cls, calls: Iterable[MethodCall], *, validate: bool = True) -> "History":
        calls = tuple(calls)
        if validate:
            for call in calls:
                validate_call(call)
        return cls(calls, build_basis(calls))

    def __len__(self) -> int:
        return len(self.calls)

    def __iter__(self) -> Iterator[MethodCall]:
        return iter(self.calls)

    @property
    def objects(self) -> list[str]:
        return sorted({c.object for c in self.calls})

    def completed(self) -> "History":
        return History.of((c for c in self.calls if c.response_ns is not None), validate=False)

    def project(self, obj: str) -> "History":
        """The object subhistory H|obj."""
        return History.of((c for c in self.calls if c.object == obj), validate=False)

    def without(self, predicate) -> "History":
        return History.of((c for c in self.calls if not predicate(c)), validate=False)


def renumber(calls: Iterable[MethodCall]) -> list[MethodCall]:
    """Sort by invocation time (ties by existing seq) and make seq dense from 0."""
    ordered = sorted(calls, key=lambda c: (c.invoke_ns, c.seq))
    return [c._replace(seq=i) for i, c in enumerate(ordered)]


# -- recording ---------------------------------------------------------------


class RecorderBusyError(RuntimeError):
    """merge() was called while some thread was still inside an active recording block."""


class _Buffer:
    __slots__ = ("calls", "active", "tid")

    def __init__(self, tid: int) -> None:
        self.calls: list[MethodCall] = []
        self.active = 0
        self.tid = tid


class Recorder:
    """Per-thread append-only call buffers merged into one History after quiescence."""

    def __init__(self) -> None:
        self._local = threading.local()
        self._buffers: list[_Buffer] = []
        self._register = threading.Lock()

    def _buffer(self) -> _Buffer:
        buf = getattr(self._local, "buf", None)
        if buf is None:
            buf = _Buffer(threading.get_ident())
            with self._register:
                self._buffers.append(buf)
            self._local.buf = buf
        return buf

    def record(self, call: MethodCall) -> None:
        self._buffer().calls.append(call)

    @contextmanager
    def active(self):
        """Mark the calling thread as recording; merge() refuses to run meanwhile."""
        buf = self._buffer()
        buf.active += 1
        try:
            yield self
        finally:
            buf.active -= 1

    def __len__(self) -> int:
        return sum(len(b.calls) for b in self._buffers)

    def merge(self) -> History:
        with self._register:
            buffers = list(self._buffers)
        if any(b.active for b in buffers):
            raise RecorderBusyError("a thread is still recording")
        tagged = []
        for b_index, buf in enumerate(buffers):
            for local, call in enumerate(buf.calls):
                tagged.append(((call.invoke_ns, b_index, local), call))
        tagged.sort(key=lambda t: t[0])
        calls = [call._replace(seq=i) for i, (_, call) in enumerate(tagged)]
        return History.of(calls, validate=False)


def record(recorder: Recorder, call: MethodCall) -> None:
    recorder.record(call)


def merge(recorder: Recorder) -> History:
    return recorder.merge()


# -- file format -------------------------------------------------------------


class HistoryFormatError(ValueError):
    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _fmt(v: Optional[int]) -> str:
    return "" if v is None else str(v)


def dumps(history: History) -> str:
    rows = [HEADER]
    for c in history.calls:
        rows.append(
            f"{c.seq},{c.thread},{c.kind.value},{c.object},{_fmt(c.item_in)},"
            f"{_fmt(c.item_out)},{_fmt(c.prev)},{c.invoke_ns},{_fmt(c.response_ns)}"
        )
    return "\n".join(rows) + "\n"


def save(history: History, path) -> None:
    Path(path).write_bytes(dumps(history).encode("utf-8"))


_KINDS = {k.value: k for k in MethodKind}


def _parse_int(text: str, line: int, col: int, name: str, *, optional: bool) -> Optional[int]:
    if text == "":
        if optional:
            return None
        raise HistoryFormatError(line, col, f"{name} is required")
    if text.startswith(_STRING_ESCAPE):
        raise HistoryFormatError(line, col, f"{name}: string payloads are reserved and not supported")
    if not _INT_RE.match(text):
        raise HistoryFormatError(line, col, f"{name}: not a decimal integer: {text!r}")
    value = int(text)
    if not INT64_MIN <= value <= INT64_MAX:
        raise HistoryFormatError(line, col, f"{name}: outside the signed 64-bit range")
    return value


def loads(text: str) -> History:
    if "\r" in text:
        pos = text.index("\r")
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        raise HistoryFormatError(line, col, "carriage return found; files must use LF newlines")
    if not text:
        raise HistoryFormatError(1, 1, "missing header")
    if not text.endswith("\n"):
        raise HistoryFormatError(text.count("\n") + 1, 1, "file must end with a newline")
    lines = text[:-1].split("\n")
    if lines[0] != HEADER:
        raise HistoryFormatError(1, 1, f"missing or malformed header; expected {HEADER!r}")
    calls = []
    for lineno, raw in enumerate(lines[1:], start=2):
        fields = raw.split(",")
        if len(fields) != 9:
            raise HistoryFormatError(lineno, 1, f"expected 9 fields, found {len(fields)}")
        cols = []
        pos = 1
        for f in fields:
            cols.append(pos)
            pos += len(f) + 1
        seq = _parse_int(fields[0], lineno, cols[0], "seq", optional=False)
        thread = _parse_int(fields[1], lineno, cols[1], "thread", optional=False)
        kind = _KINDS.get(fields[2])
        if kind is None:
            raise HistoryFormatError(lineno, cols[2], f"unknown kind {fields[2]!r}")
        if not _OBJECT_RE.match(fields[3]):
            raise HistoryFormatError(lineno, cols[3], f"bad object identifier {fields[3]!r}")
        item_in = _parse_int(fields[4], lineno, cols[4], "item_in", optional=True)
        item_out = _parse_int(fields[5], lineno, cols[5], "item_out", optional=True)
        prev = _parse_int(fields[6], lineno, cols[6], "prev", optional=True)
        invoke = _parse_int(fields[7], lineno, cols[7], "invoke_ns", optional=False)
        response = _parse_int(fields[8], lineno, cols[8], "response_ns", optional=True)
        call = MethodCall(seq, thread, kind, fields[3], item_in, item_out, prev, invoke, response)
        try:
            validate_call(call)
        except MalformedCallError as exc:
            raise HistoryFormatError(lineno, cols[2], str(exc)) from None
        calls.append(call)
    return History.of(calls, validate=False)


def load(path) -> History:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        col = exc.start - (data.rfind(b"\n", 0, exc.start) + 1) + 1
        raise HistoryFormatError(line, col, "file is not valid UTF-8") from None
    return loads(text)
