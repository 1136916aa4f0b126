"""Value assignment and the per-configuration non-negativity check.

Every completed call contributes to five accumulators over the history's
configurations: producer sums, the producer and consumer halves of writers,
consumer sums, and a per-configuration read count.  Reader values form the
series -(1/2)^k, so the exact reader sum for a configuration read k times is
-(1 - 2^-k).  That quantity is never materialised: it only matters through its
sign and the fact that it lies in (-1, 0], so everything below stays in exact
integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .history import CONSUMER, PRODUCER, READER, WRITER, Basis, History, MalformedCallError

OVER_CONSUME = "over-consume"
OVER_WRITE = "over-write"
READ_UNPRODUCED = "read-unproduced"


@dataclass
class KindSums:
    p: list[int]
    w_prod: list[int]
    w_cons: list[int]
    c_sum: list[int]
    read_count: list[int]
    basis: Basis = field(repr=False)
    pending: int = 0

    @property
    def c(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class Violation:
    configuration: tuple[str, Optional[int]]
    reason: str
    value: int

    def label(self) -> str:
        obj, item = self.configuration
        return f"({obj},{'null' if item is None else item})"


@dataclass(frozen=True)
class Verdict:
    quantifiable: bool
    h_floor: list[int]
    violations: list[Violation]
    calls: int = 0
    pending: int = 0

    def __bool__(self) -> bool:
        return self.quantifiable


def assign_values(history: History) -> KindSums:
    """Accumulate the per-kind sums over the history's basis; pending calls are skipped."""
    basis = history.basis
    c = basis.count
    p = [0] * c
    w_prod = [0] * c
    w_cons = [0] * c
    c_sum = [0] * c
    reads = [0] * c
    index = basis.map
    pending = 0
    for call in history.calls:
        if call.response_ns is None:
            pending += 1
            continue
        kind = call.kind
        obj = call.object
        if kind is PRODUCER:
            p[index[(obj, call.item_in)]] += 1
        elif kind is CONSUMER:
            c_sum[index[(obj, call.item_out)]] -= 1
        elif kind is READER:
            reads[index[(obj, call.item_out)]] += 1
        elif kind is WRITER:
            if call.prev is None or call.item_in is None:
                raise MalformedCallError(f"writer seq={call.seq} lacks a previous or new value")
            j = index[(obj, call.item_in)]
            k = index[(obj, call.prev)]
            if j != k:
                w_prod[j] += 1
                w_cons[k] -= 1
    return KindSums(p, w_prod, w_cons, c_sum, reads, basis, pending)


def split_writer(v: Sequence[int]) -> tuple[list[int], list[int]]:
    """Split one writer vector into its producer part floor((v+1)/2) and consumer part ceil((v-1)/2)."""
    prod = []
    cons = []
    for x in v:
        if x not in (-1, 0, 1):
            raise ValueError(f"writer vector entries must be -1, 0 or 1, got {x!r}")
        # floor((x+1)/2) and ceil((x-1)/2) for x in {-1,0,1}
        prod.append((x + 1) // 2)
        cons.append(-((1 - x) // 2))
    return prod, cons


def evaluate(sums: KindSums) -> Verdict:
    p, w_prod, w_cons, c_sum, reads = sums.p, sums.w_prod, sums.w_cons, sums.c_sum, sums.read_count
    reverse = sums.basis.reverse
    h_floor = [0] * sums.c
    violations = []
    for i in range(sums.c):
        made = p[i] + w_prod[i]
        base = made + w_cons[i] + c_sum[i]
        # With made >= 1 the ceiling swallows the reader sum; otherwise any read
        # leaves H[i] = base + r with r in (-1, -1/2], i.e. floor(H[i]) = base - 1.
        unproduced_read = made < 1 and reads[i] > 0
        h = base - 1 if unproduced_read else base
        h_floor[i] = h
        if h < 0:
            violations.append(Violation(reverse[i], _classify(c_sum[i], w_cons[i], unproduced_read), h))
    return Verdict(not violations, h_floor, violations, pending=sums.pending)


def _classify(c_sum: int, w_cons: int, unproduced_read: bool) -> str:
    # Largest negative contribution wins; ties go to the earlier reason.
    # A reader sum is always smaller in magnitude than any non-zero integer term.
    if c_sum == 0 and w_cons == 0 and unproduced_read:
        return READ_UNPRODUCED
    return OVER_CONSUME if -c_sum >= -w_cons else OVER_WRITE


def verify(history: History) -> Verdict:
    sums = assign_values(history)
    verdict = evaluate(sums)
    return Verdict(
        verdict.quantifiable,
        verdict.h_floor,
        verdict.violations,
        calls=len(history.calls) - sums.pending,
        pending=sums.pending,
    )


def verify_projection(history: History, obj: str) -> Verdict:
    return verify(history.project(obj))
