"""Shared fixtures: the five small example histories and call builders."""

from __future__ import annotations

import pytest

from quantifiability.history import CONSUMER, PRODUCER, READER, WRITER, History, MethodCall


def prod(seq, thread, obj, item, inv=0, resp=None):
    return MethodCall(seq, thread, PRODUCER, obj, item, None, None, inv, inv + 1 if resp is None else resp)


def cons(seq, thread, obj, item, inv=0, resp=None, pending=False):
    return MethodCall(seq, thread, CONSUMER, obj, None, item, None, inv, None if pending else (inv + 1 if resp is None else resp))


def read(seq, thread, obj, item, inv=0, resp=None):
    return MethodCall(seq, thread, READER, obj, None, item, None, inv, inv + 1 if resp is None else resp)


def write(seq, thread, obj, new, prev, inv=0, resp=None):
    return MethodCall(seq, thread, WRITER, obj, new, None, prev, inv, inv + 1 if resp is None else resp)


def make_h1() -> History:
    return History.of(
        [
            prod(0, 0, "x", 7, 100, 300),
            prod(1, 1, "x", 8, 325, 525),
            cons(2, 0, "x", 7, 550, 750),
        ]
    )


def make_h2() -> History:
    return History.of(
        [
            prod(0, 0, "x", 7, 100, 300),
            prod(1, 1, "x", 8, 325, 525),
            cons(2, 0, "x", 3, 550, 750),
        ]
    )


def make_h3() -> History:
    return History.of(
        [
            cons(0, 0, "x", 7, 100, 350),
            cons(1, 1, "y", 8, 200, 425),
            prod(2, 0, "y", 8, 375, 600),
            prod(3, 1, "x", 7, 450, 675),
        ]
    )


def make_h4() -> History:
    # the conditional pops resolved to the items they may return
    return History.of(
        [
            cons(0, 0, "y", 8, 100, 350),
            cons(1, 1, "x", 7, 200, 425),
            prod(2, 0, "x", 7, 375, 600),
            prod(3, 1, "y", 8, 450, 675),
        ]
    )


def make_h4_null() -> History:
    # the conditional pops resolved to null
    return History.of(
        [
            cons(0, 0, "y", None, 100, 350),
            cons(1, 1, "x", None, 200, 425),
            prod(2, 0, "x", 7, 375, 600),
            prod(3, 1, "y", 8, 450, 675),
        ]
    )


def make_h5() -> History:
    # conserved pops: P0's requests stay pending instead of returning null
    return History.of(
        [
            cons(0, 0, "z", None, 100, pending=True),
            prod(1, 2, "z", 1, 325, 525),
            cons(2, 1, "z", 1, 325, 525),
            cons(3, 0, "z", None, 550, pending=True),
        ]
    )


@pytest.fixture
def h1():
    return make_h1()


@pytest.fixture
def h2():
    return make_h2()


@pytest.fixture
def h3():
    return make_h3()


@pytest.fixture
def h4():
    return make_h4()


@pytest.fixture
def h5():
    return make_h5()


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
