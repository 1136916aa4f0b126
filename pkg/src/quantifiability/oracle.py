"""Brute-force reference checks, kept independent of the fast verifier.

Nothing here imports :mod:`quantifiability.verifier`; the test-suite compares
the two.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .history import CONSUMER, PRODUCER, READER, WRITER, History

MAX_ORDERING_CALLS = 10
MAX_NAIVE_CALLS = 10_000


class OracleSizeError(ValueError):
    pass


def _encode(history: History):
    """Completed calls as hashable tuples over small integer configuration ids."""
    ids: dict = {}

    def cfg(obj, item):
        return ids.setdefault((obj, item), len(ids))

    ops = []
    for call in history.calls:
        if call.response_ns is None:
            continue
        if call.kind is PRODUCER:
            ops.append(("P", cfg(call.object, call.item_in), -1))
        elif call.kind is CONSUMER:
            ops.append(("C", cfg(call.object, call.item_out), -1))
        elif call.kind is READER:
            ops.append(("R", cfg(call.object, call.item_out), -1))
        else:
            ops.append(("W", cfg(call.object, call.item_in), cfg(call.object, call.prev)))
    return ops, len(ids)


def exists_conservative_ordering(history: History) -> bool:
    """True iff some permutation of the completed calls replays without touching absent items.

    Replay rules: a producer adds one live copy of its configuration; a consumer
    needs a live copy and removes it; a writer needs a live copy of its previous
    value, removes it and adds the new value, atomically; a reader needs the
    value to have existed at some earlier point.
    """
    ops, c = _encode(history)
    if len(ops) > MAX_ORDERING_CALLS:
        raise OracleSizeError(f"{len(ops)} calls exceeds the brute-force limit of {MAX_ORDERING_CALLS}")
    kinds = sorted(set(ops))
    counts0 = tuple(ops.count(k) for k in kinds)

    @lru_cache(maxsize=None)
    def search(remaining: tuple, stock: tuple, seen: frozenset) -> bool:
        if not any(remaining):
            return True
        for pos, n in enumerate(remaining):
            if not n:
                continue
            tag, a, b = kinds[pos]
            if tag == "P":
                new_stock = _bump(stock, a, 1)
                new_seen = seen | {a}
            elif tag == "C":
                if stock[a] < 1:
                    continue
                new_stock = _bump(stock, a, -1)
                new_seen = seen
            elif tag == "R":
                if a not in seen:
                    continue
                new_stock, new_seen = stock, seen
            else:
                if stock[b] < 1:
                    continue
                new_stock = _bump(_bump(stock, b, -1), a, 1)
                new_seen = seen | {a}
            rest = remaining[:pos] + (n - 1,) + remaining[pos + 1 :]
            if search(rest, new_stock, new_seen):
                return True
        return False

    return search(counts0, (0,) * c, frozenset())


def _bump(stock: tuple, i: int, d: int) -> tuple:
    return stock[:i] + (stock[i] + d,) + stock[i + 1 :]


def naive_definition2(history: History) -> bool:
    """Literal evaluation with one vector per call and rational reader terms."""
    ops, c = _encode(history)
    if len(ops) > MAX_NAIVE_CALLS:
        raise OracleSizeError(f"{len(ops)} calls exceeds the naive evaluation limit of {MAX_NAIVE_CALLS}")
    P = [0] * c
    W_prod = [0] * c
    W_cons = [0] * c
    R = [Fraction(0)] * c
    C = [0] * c
    read_index = [0] * c
    half = Fraction(1, 2)
    for tag, j, k in ops:
        if tag == "P":
            P[j] += 1
        elif tag == "C":
            C[j] -= 1
        elif tag == "R":
            read_index[j] += 1
            R[j] -= half ** read_index[j]
        else:
            v = [0] * c
            if j != k:
                v[j] = 1
                v[k] = -1
            for i in range(c):
                W_prod[i] += math.floor(Fraction(v[i] + 1) * half)
                W_cons[i] += math.ceil(Fraction(v[i] - 1) * half)
    for i in range(c):
        if P[i] + W_prod[i] >= 1:
            h = math.ceil(P[i] + W_prod[i] + R[i]) + W_cons[i] + C[i]
        else:
            h = P[i] + W_prod[i] + W_cons[i] + R[i] + C[i]
        if h < 0:
            return False
    return True


def brute_inversions(sequence: Sequence[int]) -> list[int]:
    n = len(sequence)
    if n > 10_000:
        raise OracleSizeError("brute_inversions is limited to 10^4 elements")
    out = []
    for j in range(n):
        a = sequence[j]
        before = sum(1 for i in range(j) if sequence[i] > a)
        after = sum(1 for i in range(j + 1, n) if sequence[i] < a)
        out.append(before + after)
    return out
