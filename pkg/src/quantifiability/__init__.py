"""Recording, verification and analysis of quantifiable concurrent histories.

Also home to a quantifiable stack and queue, two conventional baselines and a
benchmark harness that measures throughput and ordering entropy.
"""

from .atomics import Clock, Ticket, cancel
from .harness import BenchReport, InversionStats, WorkloadSpec, entropy, inversions, rank_and_order, run_bench
from .history import (
    CONSUMER,
    PRODUCER,
    READER,
    WRITER,
    Basis,
    History,
    MethodCall,
    MethodKind,
    Recorder,
    load,
    merge,
    params_to_index,
    record,
    save,
)
from .qqueue import QQueue, QQueueConfig
from .qstack import QStack, QStackConfig
from .baselines import BaselineQueue, TreiberStack
from .verifier import KindSums, Verdict, assign_values, split_writer, verify, verify_projection

__all__ = [
    "BaselineQueue",
    "Basis",
    "BenchReport",
    "CONSUMER",
    "Clock",
    "History",
    "InversionStats",
    "KindSums",
    "MethodCall",
    "MethodKind",
    "PRODUCER",
    "QQueue",
    "QQueueConfig",
    "QStack",
    "QStackConfig",
    "READER",
    "Recorder",
    "Ticket",
    "TreiberStack",
    "Verdict",
    "WRITER",
    "WorkloadSpec",
    "assign_values",
    "cancel",
    "entropy",
    "inversions",
    "load",
    "merge",
    "params_to_index",
    "rank_and_order",
    "record",
    "run_bench",
    "save",
    "split_writer",
    "verify",
    "verify_projection",
]
