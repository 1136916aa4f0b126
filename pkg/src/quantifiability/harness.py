"""Workload runner, throughput report and the inversion/entropy pipeline."""

from __future__ import annotations

import math
import random
import sys
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .atomics import DEFAULT_PRIMITIVES, Clock, Primitives, splitmix64
from .baselines import BaselineQueue, TreiberStack
from .history import CONSUMER, PRODUCER, History, MethodCall, Recorder
from .qqueue import QQueue, QQueueConfig
from .qstack import FAIL_THRESHOLD, QStack, QStackConfig

STRUCTURES = ("qstack", "qqueue", "treiber", "baseq")
QUANTIFIABLE = ("qstack", "qqueue")
PAIRWISE = "PAIRWISE"
MIXES = (25, 50, 75, PAIRWISE)
REPORT_HEADER = "structure,threads,ops_per_thread,mix,seed,width,throughput_ops_per_us,wall_ns"
STATS_HEADER = "inversion_count,frequency,probability"


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    structure: str
    threads: int = 1
    ops_per_thread: int = 1000
    mix: Union[int, str] = 50
    seed: int = 0
    prefill: int = 0
    width: int = 0
    fail_threshold: int = FAIL_THRESHOLD
    # every thread produces half its calls, waits for the others, then consumes
    fill_drain: bool = False
    switch_interval: Optional[float] = None
    logical_clock: bool = False
    race_detector: Optional[Primitives] = field(default=None, compare=False)
    progress_timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.structure not in STRUCTURES:
            raise WorkloadError(f"unknown structure {self.structure!r}; expected one of {', '.join(STRUCTURES)}")
        if self.threads < 1:
            raise WorkloadError("threads must be at least 1")
        if self.ops_per_thread < 0:
            raise WorkloadError("ops_per_thread must be non-negative")
        if self.mix not in MIXES:
            raise WorkloadError(f"mix must be one of 25, 50, 75 or {PAIRWISE}, got {self.mix!r}")
        if self.prefill < 0:
            raise WorkloadError("prefill must be non-negative")
        if self.width < 0:
            raise WorkloadError("width must be non-negative (0 selects the default)")
        if self.fail_threshold < 1:
            raise WorkloadError("fail_threshold must be at least 1")


def parse_mix(text: str) -> Union[int, str]:
    if text.upper() in (PAIRWISE, "PW", "50PW"):
        return PAIRWISE
    try:
        value = int(text)
    except ValueError:
        raise WorkloadError(f"bad mix {text!r}") from None
    if value not in MIXES:
        raise WorkloadError(f"mix must be one of 25, 50, 75 or {PAIRWISE}, got {text!r}")
    return value


@dataclass(frozen=True)
class BenchReport:
    structure: str
    threads: int
    ops_per_thread: int
    mix: Union[int, str]
    seed: int
    width: int
    throughput_ops_per_us: float
    wall_ns: int
    per_thread_ops: tuple[int, ...]
    producers: int
    consumers: int
    pending_before_drain: int
    drain_producers: int
    stalled: bool = False

    def csv_row(self) -> str:
        return (
            f"{self.structure},{self.threads},{self.ops_per_thread},{self.mix},{self.seed},"
            f"{self.width},{self.throughput_ops_per_us:.6f},{self.wall_ns}"
        )


class _Adapter:
    """Uniform produce/consume over the four structures."""

    def __init__(self, spec: WorkloadSpec, clock: Clock, prim: Primitives) -> None:
        s = spec.structure
        self.conserving = s in QUANTIFIABLE
        if s == "qstack":
            st = QStack(QStackConfig(spec.width, spec.fail_threshold, spec.seed), clock=clock, primitives=prim)
            self.produce, self.consume = st.push, st.pop
            self.width = st.config.width
        elif s == "qqueue":
            q = QQueue(QQueueConfig(spec.width, spec.seed), clock=clock, primitives=prim)
            self.produce, self.consume = q.enqueue, q.dequeue
            self.width = q.config.width
        elif s == "treiber":
            t = TreiberStack(clock=clock, primitives=prim)
            self.produce, self.consume = t.t_push, t.t_pop
            self.width = 1
        else:
            b = BaselineQueue(clock=clock, primitives=prim)
            self.produce, self.consume = b.b_enqueue, b.b_dequeue
            self.width = 1
        self.structure = s


def _thread_seed(seed: int, tid: int) -> int:
    return splitmix64((seed & ((1 << 64) - 1)) ^ splitmix64(tid + 1))


def _plan(spec: WorkloadSpec, tid: int) -> list[bool]:
    """True for a producer call, False for a consumer call."""
    n = spec.ops_per_thread
    if spec.fill_drain:
        half = n // 2
        return [True] * half + [False] * (n - half)
    if spec.mix == PAIRWISE:
        return [i % 2 == 0 for i in range(n)]
    rng = random.Random(_thread_seed(spec.seed, tid))
    p = spec.mix / 100
    return [rng.random() < p for _ in range(n)]


class _Worker:
    def __init__(self, tid: int, plan: list[bool]) -> None:
        self.tid = tid
        self.plan = plan
        self.progress = 0
        self.done_issuing = False
        # (invoke_ns, ticket) for conserving consumers, (invoke_ns, value, stamp) otherwise
        self.consumed: list = []
        self.error: Optional[BaseException] = None


def run_bench(spec: WorkloadSpec) -> tuple[BenchReport, History]:
    clock = Clock(logical=spec.logical_clock)
    det = spec.race_detector
    prim = det if det is not None else DEFAULT_PRIMITIVES
    ad = _Adapter(spec, clock, prim)
    recorder = Recorder()
    obj = spec.structure
    T = spec.threads
    main_tid = T

    old_interval = sys.getswitchinterval()
    if spec.switch_interval is not None:
        sys.setswitchinterval(spec.switch_interval)
    try:
        for k in range(spec.prefill):
            v = (main_tid << 32) | k
            inv = clock.now()
            stamp = ad.produce(v)
            recorder.record(MethodCall(0, main_tid, PRODUCER, obj, v, None, None, inv, stamp))

        workers = [_Worker(tid, _plan(spec, tid)) for tid in range(T)]
        start = threading.Barrier(T + 1)
        phase = threading.Barrier(T) if spec.fill_drain else None
        drained = threading.Event()

        def body(w: _Worker) -> None:
            produce, consume, conserving = ad.produce, ad.consume, ad.conserving
            now = clock.now
            record = recorder.record
            tid = w.tid
            start.wait()
            for i, is_producer in enumerate(w.plan):
                if phase is not None and i == len(w.plan) // 2:
                    phase.wait()
                inv = now()
                if is_producer:
                    v = (tid << 32) | i
                    stamp = produce(v)
                    record(MethodCall(0, tid, PRODUCER, obj, v, None, None, inv, stamp))
                elif conserving:
                    w.consumed.append((inv, consume()))
                else:
                    value, stamp = consume()
                    w.consumed.append((inv, value, stamp))
                w.progress += 1
            w.done_issuing = True
            drained.wait()
            for entry in w.consumed:
                if conserving:
                    inv, ticket = entry
                    if ticket.fulfilled:
                        value, stamp = ticket.result()
                        record(MethodCall(0, tid, CONSUMER, obj, None, value, None, inv, stamp))
                    else:
                        record(MethodCall(0, tid, CONSUMER, obj, None, None, None, inv, None))
                else:
                    inv, value, stamp = entry
                    record(MethodCall(0, tid, CONSUMER, obj, None, value, None, inv, stamp))

        def run(w: _Worker, token) -> None:
            try:
                if det is not None:
                    det.adopt(token)
                body(w)
            except BaseException as exc:  # surfaced to the caller after join
                w.error = exc
                w.done_issuing = True
            finally:
                if det is not None:
                    det.finish()

        threads = []
        for w in workers:
            token = det.fork() if det is not None else None
            th = threading.Thread(target=run, args=(w, token), name=f"worker-{w.tid}", daemon=True)
            threads.append(th)
            th.start()

        start.wait()
        t0 = time.perf_counter_ns()
        stalled = False
        last = -1
        last_change = time.monotonic()
        while not all(w.done_issuing for w in workers):
            time.sleep(0.002)
            total = sum(w.progress for w in workers)
            if total != last:
                last, last_change = total, time.monotonic()
            elif time.monotonic() - last_change > spec.progress_timeout:
                stalled = True
                break
        wall_ns = time.perf_counter_ns() - t0
        if stalled:
            raise RuntimeError(f"no progress for {spec.progress_timeout}s; workers stalled")

        pending = []
        if ad.conserving:
            for w in workers:
                pending.extend(t for _, t in w.consumed if not t.fulfilled)
        pending_before = len(pending)
        producers = spec.prefill + sum(sum(w.plan) for w in workers)
        consumers = sum(len(w.plan) - sum(w.plan) for w in workers)

        drain = 0
        limit = pending_before + 1
        waiting = 0
        while waiting < len(pending):
            if pending[waiting].fulfilled:
                waiting += 1
                continue
            if drain >= limit:
                raise RuntimeError("drain phase did not fulfil every pending consumer")
            v = (main_tid << 32) | (spec.prefill + drain)
            inv = clock.now()
            stamp = ad.produce(v)
            recorder.record(MethodCall(0, main_tid, PRODUCER, obj, v, None, None, inv, stamp))
            drain += 1

        drained.set()
        for th in threads:
            th.join()
        if det is not None:
            det.join()
        for w in workers:
            if w.error is not None:
                raise w.error
    finally:
        sys.setswitchinterval(old_interval)

    history = recorder.merge()
    issued = T * spec.ops_per_thread
    wall_us = wall_ns / 1000
    throughput = issued / wall_us if issued and wall_us > 0 else 0.0
    report = BenchReport(
        spec.structure,
        T,
        spec.ops_per_thread,
        spec.mix,
        spec.seed,
        ad.width,
        throughput,
        wall_ns,
        tuple(w.progress for w in workers),
        producers,
        consumers,
        pending_before,
        drain,
        stalled,
    )
    return report, history


def strip_failed_consumers(history: History) -> History:
    """Drop completed consumers that returned nothing (conditional semantics)."""
    return history.without(lambda c: c.kind is CONSUMER and c.response_ns is not None and c.item_out is None)


def report_csv(reports: Sequence[BenchReport]) -> str:
    return "\n".join([REPORT_HEADER, *(r.csv_row() for r in reports)]) + "\n"


# -- inversions and entropy ---------------------------------------------------------


class RankError(ValueError):
    pass


def inversions(ranks: Sequence[int]) -> list[int]:
    """Per-element inversion counts: larger values before it plus smaller values after it."""
    n = len(ranks)
    counts = [0] * n
    idx = list(range(n))
    buf = [0] * n
    a = list(ranks)
    width = 1
    # bottom-up merge sort over positions, ordered by value
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[idx[j]] < a[idx[i]]:
                    # every remaining left element is larger than idx[j]
                    counts[idx[j]] += mid - i
                    buf[k] = idx[j]
                    j += 1
                else:
                    # right elements already taken are smaller than idx[i]
                    counts[idx[i]] += j - mid
                    buf[k] = idx[i]
                    i += 1
                k += 1
            while i < mid:
                counts[idx[i]] += j - mid
                buf[k] = idx[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = idx[j]
                j += 1
                k += 1
            idx[lo:hi] = buf[lo:hi]
        width *= 2
    return counts


@dataclass(frozen=True)
class InversionStats:
    counts: tuple[int, ...]
    distribution: dict
    entropy_bits: float
    frequencies: dict = field(default_factory=dict)

    @property
    def max_inversion(self) -> int:
        return max(self.counts)

    def csv(self) -> str:
        n = len(self.counts)
        rows = [STATS_HEADER]
        for x in sorted(self.frequencies):
            k = self.frequencies[x]
            rows.append(f"{x},{k},{k / n!r}")
        rows.append(f"# entropy_bits={self.entropy_bits!r}")
        return "\n".join(rows) + "\n"


def entropy(counts: Sequence[int]) -> InversionStats:
    if len(counts) == 0:
        raise ValueError("entropy of an empty count sequence is undefined")
    n = len(counts)
    freq = Counter(counts)
    dist = {x: k / n for x, k in freq.items()}
    h = -sum(p * math.log2(p) for p in dist.values())
    return InversionStats(tuple(counts), dist, h + 0.0 if h != 0 else 0.0, dict(freq))


LIFO = "lifo"
FIFO = "fifo"


def rank_and_order(history: History, discipline: str) -> list[int]:
    """Normalised output ranks of the consumed items, in consumption order.

    Items are ranked by the order in which their producers took effect; the
    consumer sequence is ordered the same way.  FIFO keeps ranks as they are,
    LIFO negates them, so a sequential run yields no inversions.
    """
    d = discipline.lower()
    if d not in (LIFO, FIFO):
        raise ValueError(f"discipline must be lifo or fifo, got {discipline!r}")
    prods = [c for c in history.calls if c.kind is PRODUCER and c.response_ns is not None]
    cons = [c for c in history.calls if c.kind is CONSUMER and c.response_ns is not None and c.item_out is not None]
    if not cons:
        raise RankError("history has no completed consumer that returned an item")
    if any(c.response_ns == 0 for c in prods + cons) and len(prods) + len(cons) > 1:
        raise RankError("history carries no completion stamps; record it with a clock")
    prods.sort(key=lambda c: (c.response_ns, c.seq))
    rank = {}
    for r, c in enumerate(prods):
        key = (c.object, c.item_in)
        if key in rank:
            raise RankError(f"item {c.item_in} produced twice; ranks need distinct items")
        rank[key] = r
    cons.sort(key=lambda c: (c.response_ns, c.seq))
    out = []
    for c in cons:
        r = rank.get((c.object, c.item_out))
        if r is None:
            raise RankError(f"consumed item {c.item_out} has no producer")
        out.append(-r if d == LIFO else r)
    return out


def history_entropy(history: History, discipline: str) -> InversionStats:
    return entropy(inversions(rank_and_order(history, discipline)))
