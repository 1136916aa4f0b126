"""Command-line entry point: verify, oracle, tensor, bench and entropy.

Machine-readable output is CSV on stdout; diagnostics go to stderr.  Exit
codes: 0 success / quantifiable, 1 not quantifiable, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import history as hist
from .harness import (
    STRUCTURES,
    RankError,
    WorkloadError,
    WorkloadSpec,
    history_entropy,
    parse_mix,
    report_csv,
    run_bench,
)
from .oracle import OracleSizeError, exists_conservative_ordering, naive_definition2
from .tensor import ShapeError, TensorShape, heatmap, history_tensor, sum_over
from .verifier import verify

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load(path: str) -> hist.History:
    try:
        return hist.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except hist.HistoryFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _bool(b: bool) -> str:
    return "true" if b else "false"


def cmd_verify(args) -> int:
    h = _load(args.file)
    v = verify(h)
    print("verdict,calls,pending,configurations")
    print(f"{'quantifiable' if v.quantifiable else 'not-quantifiable'},{v.calls},{v.pending},{h.basis.count}")
    if v.violations:
        print()
        print("configuration,reason")
        for viol in v.violations:
            print(f"{viol.label()},{viol.reason}")
    return EXIT_OK if v.quantifiable else EXIT_FAIL


def cmd_oracle(args) -> int:
    h = _load(args.file)
    try:
        ordering = exists_conservative_ordering(h)
        naive = naive_definition2(h)
    except OracleSizeError as exc:
        raise UsageError(str(exc)) from None
    print("conservative_ordering,definition")
    print(f"{_bool(ordering)},{_bool(naive)}")
    return EXIT_OK if ordering else EXIT_FAIL


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def cmd_tensor(args) -> int:
    h = _load(args.file)
    try:
        shape = TensorShape.parse(args.dims)
        tensor, axes = history_tensor(h, shape)
    except ShapeError as exc:
        raise UsageError(str(exc)) from None
    matrix = sum_over(tensor, ("M", "P")) if args.emit == "matrix" else heatmap(tensor)
    print(",".join(["item", *axes.objects]))
    for i, item in enumerate(axes.items):
        label = "null" if item is None else str(item)
        print(",".join([label, *(_num(matrix[i, o]) for o in range(len(axes.objects)))]))
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values:
        raise UsageError("empty list")
    return values


def cmd_bench(args) -> int:
    seed = args.seed
    env = os.environ.get("QUANT_SEED")
    if env:
        try:
            seed = int(env, 0)
        except ValueError:
            raise UsageError(f"QUANT_SEED must be an integer, got {env!r}") from None
    structures = args.structure.split(",")
    for s in structures:
        if s not in STRUCTURES:
            raise UsageError(f"unknown structure {s!r}; expected one of {', '.join(STRUCTURES)}")
    thread_counts = _int_list(args.threads)
    try:
        mix = parse_mix(args.mix)
    except WorkloadError as exc:
        raise UsageError(str(exc)) from None
    runs = [(s, t) for s in structures for t in thread_counts]
    reports = []
    for s, t in runs:
        try:
            spec = WorkloadSpec(
                s,
                threads=t,
                ops_per_thread=args.ops,
                mix=mix,
                seed=seed,
                prefill=args.prefill,
                width=args.width,
                fail_threshold=args.fail_threshold,
                fill_drain=args.fill_drain,
            )
        except WorkloadError as exc:
            raise UsageError(str(exc)) from None
        report, history = run_bench(spec)
        reports.append(report)
        if args.record:
            path = Path(args.record)
            if len(runs) > 1:
                path = path.with_name(f"{path.stem}_{s}_t{t}{path.suffix}")
            try:
                hist.save(history, path)
            except OSError as exc:
                raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None
    sys.stdout.write(report_csv(reports))
    if args.figure:
        from .plots import throughput_figure

        throughput_figure(reports, args.figure)
    return EXIT_OK


def cmd_entropy(args) -> int:
    h = _load(args.file)
    try:
        stats = history_entropy(h, args.discipline)
    except RankError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(stats.csv())
    if args.figure:
        from .plots import inversion_figure

        inversion_figure(stats, args.figure, title=args.discipline.upper())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quant", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check a history file for quantifiability")
    v.add_argument("file")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force reference check of a small history")
    o.add_argument("file")
    o.set_defaults(func=cmd_oracle)

    t = sub.add_parser("tensor", help="fold a history into its tensor and print a matrix")
    t.add_argument("file")
    t.add_argument("--dims", required=True, help="I,O,P,M")
    t.add_argument("--emit", choices=("matrix", "heatmap"), default="matrix")
    t.set_defaults(func=cmd_tensor)

    b = sub.add_parser("bench", help="run a workload and print throughput rows")
    b.add_argument("--structure", required=True, help=f"one or more of {','.join(STRUCTURES)}")
    b.add_argument("--threads", default="1", help="thread count or comma-separated sweep")
    b.add_argument("--ops", type=int, default=1000, help="calls per thread")
    b.add_argument("--mix", default="50", help="producer percentage 25, 50, 75 or PAIRWISE")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--prefill", type=int, default=0)
    b.add_argument("--width", type=int, default=0, help="tail slots / sublists (0: cpu count)")
    b.add_argument("--fail-threshold", type=int, default=8)
    b.add_argument("--fill-drain", action="store_true", help="produce first, then consume")
    b.add_argument("--record", help="write the recorded history here")
    b.add_argument("--figure", help="write a throughput figure here")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("entropy", help="inversion distribution and entropy of a history")
    e.add_argument("file")
    e.add_argument("--discipline", choices=("lifo", "fifo"), required=True)
    e.add_argument("--figure", help="write an inversion histogram here")
    e.set_defaults(func=cmd_entropy)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
