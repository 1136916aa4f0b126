import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cons, prod
from quantifiability.harness import (
    FIFO,
    LIFO,
    REPORT_HEADER,
    STATS_HEADER,
    RankError,
    WorkloadError,
    WorkloadSpec,
    entropy,
    history_entropy,
    inversions,
    parse_mix,
    rank_and_order,
    report_csv,
    run_bench,
)
from quantifiability.history import History
from quantifiability.oracle import brute_inversions


def test_inversions_match_brute_force():
    rng = random.Random(0)
    for _ in range(1000):
        n = rng.randrange(0, 513)
        seq = list(range(n))
        rng.shuffle(seq)
        assert inversions(seq) == brute_inversions(seq)


def test_inversions_with_ties():
    seq = [2, 2, 1, 3, 1]
    assert inversions(seq) == brute_inversions(seq)


def test_inversions_of_sorted_and_reversed():
    assert inversions(list(range(50))) == [0] * 50
    assert inversions(list(range(50, 0, -1))) == [49] * 50


def test_entropy_examples():
    assert entropy([1, 1, 0]).entropy_bits == pytest.approx(0.9183, abs=1e-4)
    assert entropy([4, 4, 4]).entropy_bits == 0.0
    assert entropy(list(range(8))).entropy_bits == pytest.approx(3.0)
    with pytest.raises(ValueError):
        entropy([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=60), st.randoms(use_true_random=False))
def test_entropy_ignores_order(counts, rnd):
    shuffled = list(counts)
    rnd.shuffle(shuffled)
    assert math.isclose(entropy(counts).entropy_bits, entropy(shuffled).entropy_bits, abs_tol=1e-12)


def test_stats_csv():
    text = entropy([1, 1, 0]).csv().splitlines()
    assert text[0] == STATS_HEADER
    assert text[1].startswith("0,1,0.333")
    assert text[2].startswith("1,2,0.666")
    assert text[3].startswith("# entropy_bits=0.918")


def test_rank_and_order_sequential():
    calls = [prod(i, 0, "s", i, 10 * i + 1, 10 * i + 2) for i in range(3)]
    calls += [cons(3 + i, 0, "s", it, 100 + i, 101 + i) for i, it in enumerate((2, 1, 0))]
    h = History.of(calls)
    assert rank_and_order(h, LIFO) == [-2, -1, 0]
    assert inversions(rank_and_order(h, LIFO)) == [0, 0, 0]
    assert history_entropy(h, FIFO).max_inversion == 2


def test_rank_and_order_errors():
    with pytest.raises(RankError):
        rank_and_order(History.of([prod(0, 0, "s", 1)]), LIFO)
    with pytest.raises(RankError):
        rank_and_order(History.of([prod(0, 0, "s", 1, 1, 2), prod(1, 0, "s", 1, 3, 4), cons(2, 0, "s", 1, 5, 6)]), LIFO)
    with pytest.raises(RankError):
        rank_and_order(History.of([prod(0, 0, "s", 1, 1, 2), cons(1, 0, "s", 9, 5, 6)]), FIFO)
    with pytest.raises(ValueError):
        rank_and_order(History.of([prod(0, 0, "s", 1, 1, 2), cons(1, 0, "s", 1, 5, 6)]), "random")


def test_zero_ops():
    report, h = run_bench(WorkloadSpec("qstack", threads=2, ops_per_thread=0))
    assert report.throughput_ops_per_us == 0.0
    assert len(h.calls) == 0


def test_prefill_is_recorded():
    report, h = run_bench(WorkloadSpec("qqueue", threads=1, ops_per_thread=0, prefill=5))
    assert len(h.calls) == 5 and report.producers == 5


@pytest.mark.parametrize("structure", ["qstack", "qqueue", "treiber", "baseq"])
def test_single_thread_runs_are_deterministic(structure):
    spec = WorkloadSpec(structure, threads=1, ops_per_thread=400, mix=50, seed=9, logical_clock=True, width=4)
    _, h1 = run_bench(spec)
    _, h2 = run_bench(spec)
    assert h1.calls == h2.calls


def test_different_seeds_differ():
    a = run_bench(WorkloadSpec("qstack", threads=1, ops_per_thread=200, seed=1, logical_clock=True))[1]
    b = run_bench(WorkloadSpec("qstack", threads=1, ops_per_thread=200, seed=2, logical_clock=True))[1]
    assert a.calls != b.calls


def test_fill_drain_plan():
    report, h = run_bench(WorkloadSpec("qqueue", threads=3, ops_per_thread=10, fill_drain=True))
    assert report.producers == report.consumers == 15
    assert report.pending_before_drain == 0


def test_report_csv():
    report, _ = run_bench(WorkloadSpec("baseq", threads=1, ops_per_thread=10, mix="PAIRWISE"))
    lines = report_csv([report]).splitlines()
    assert lines[0] == REPORT_HEADER
    fields = lines[1].split(",")
    assert fields[:6] == ["baseq", "1", "10", "PAIRWISE", "0", "1"]
    assert float(fields[6]) > 0 and int(fields[7]) > 0


def test_spec_validation():
    for bad in (
        dict(structure="heap"),
        dict(structure="qstack", threads=0),
        dict(structure="qstack", ops_per_thread=-1),
        dict(structure="qstack", mix=60),
        dict(structure="qstack", width=-1),
        dict(structure="qstack", prefill=-1),
    ):
        with pytest.raises(WorkloadError):
            WorkloadSpec(**bad)


def test_parse_mix():
    assert parse_mix("25") == 25
    assert parse_mix("pairwise") == "PAIRWISE"
    for bad in ("60", "x"):
        with pytest.raises(WorkloadError):
            parse_mix(bad)


def test_permutation_inversion_examples():
    for perm in itertools.permutations(range(5)):
        assert inversions(list(perm)) == brute_inversions(list(perm))
