import itertools

import pytest

from conftest import cons, make_h1, make_h2, prod, read, write
from quantifiability.history import History
from quantifiability.oracle import (
    MAX_ORDERING_CALLS,
    OracleSizeError,
    brute_inversions,
    exists_conservative_ordering,
    naive_definition2,
)
from quantifiability.verifier import verify


def test_h1_h2():
    assert exists_conservative_ordering(make_h1())
    assert not exists_conservative_ordering(make_h2())


def test_ordering_guard():
    h = History.of([prod(i, 0, "x", i, i) for i in range(MAX_ORDERING_CALLS + 1)])
    with pytest.raises(OracleSizeError):
        exists_conservative_ordering(h)


def test_ordering_needs_interleaving():
    # consumer listed first, producer later: still orderable
    assert exists_conservative_ordering(History.of([cons(0, 0, "x", 1), prod(1, 1, "x", 1)]))
    # a reader only needs the value to have existed at some point
    h = History.of([prod(0, 0, "x", 1), cons(1, 0, "x", 1), read(2, 1, "x", 1)])
    assert exists_conservative_ordering(h)
    assert not exists_conservative_ordering(History.of([read(0, 0, "x", 1)]))


def test_writer_needs_previous_value():
    assert exists_conservative_ordering(History.of([prod(0, 0, "x", 7), write(1, 0, "x", 8, 7)]))
    assert not exists_conservative_ordering(History.of([write(0, 0, "x", 8, 7)]))


def test_pending_calls_ignored():
    h = History.of([cons(0, 0, "x", None, 0, pending=True), prod(1, 0, "x", 1)])
    assert exists_conservative_ordering(h)


def test_naive_examples():
    assert naive_definition2(make_h1())
    assert not naive_definition2(History.of([read(0, 0, "x", 1)]))


def test_naive_guard():
    h = History.of([prod(i, 0, "x", 1, i) for i in range(10_001)])
    with pytest.raises(OracleSizeError):
        naive_definition2(h)


@pytest.mark.parametrize(
    "seq,expected",
    [([1, 2, 3], [0, 0, 0]), ([2, 1, 3], [1, 1, 0]), ([3, 2, 1], [2, 2, 2]), ([], [])],
)
def test_brute_inversions(seq, expected):
    assert brute_inversions(seq) == expected


def _call(kind, item, seq):
    # payload patterns over one object and items 7, 8
    if kind == "P":
        return prod(seq, 0, "x", item, seq)
    if kind == "C":
        return cons(seq, 0, "x", item, seq)
    if kind == "R":
        return read(seq, 0, "x", item, seq)
    return write(seq, 0, "x", item, 15 - item, seq)


def _disagreements(kind_sets):
    bad = []
    for kinds in kind_sets:
        for items in itertools.product((7, 8), repeat=len(kinds)):
            h = History.of([_call(k, it, i) for i, (k, it) in enumerate(zip(kinds, items))])
            if verify(h).quantifiable != exists_conservative_ordering(h):
                bad.append(list(zip(kinds, items)))
    return bad


def test_all_four_call_kind_combinations_agree():
    bad = _disagreements(itertools.product("PCRW", repeat=4))
    assert not bad, f"{len(bad)} disagreements, first {bad[0]} (W,i) writes i over 15-i"


def test_writer_free_combinations_agree():
    assert _disagreements(itertools.product("PCR", repeat=4)) == []


def test_writer_free_two_object_sweep():
    types = []
    for obj in ("x", "y"):
        for item in (1, 2):
            types += [("P", obj, item), ("C", obj, item), ("R", obj, item)]
    checked = 0
    for n in range(7):
        for combo in itertools.combinations_with_replacement(types, n):
            calls = []
            for i, (k, obj, item) in enumerate(combo):
                f = {"P": prod, "C": cons, "R": read}[k]
                calls.append(f(i, 0, obj, item, i))
            h = History.of(calls)
            assert verify(h).quantifiable == exists_conservative_ordering(h), combo
            checked += 1
    assert checked == 18564


def test_cyclic_writers_are_accepted_by_verifier_only():
    # Each writer's consumed value is supplied by the other writer, so the sums
    # balance, yet no order can start: neither previous value exists yet.
    h = History.of([write(0, 0, "x", 8, 7), write(1, 1, "x", 7, 8)])
    assert verify(h).quantifiable
    assert naive_definition2(h)
    assert not exists_conservative_ordering(h)


def test_self_write_on_absent_value_is_accepted_by_verifier_only():
    h = History.of([write(0, 0, "x", 7, 7)])
    assert verify(h).quantifiable
    assert not exists_conservative_ordering(h)
