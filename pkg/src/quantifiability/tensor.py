"""Dense order-4 tensor view of a history: items x objects x processes x methods.

The flat history vector is laid out method-major and item-fastest, so folding
it column-major (first index fastest) turns each run of ``dI`` consecutive
entries into one mode-1 fiber.  In 1-based terms, entry (i1, i2, i3, i4) of the
tensor is element j = i1 + sum_{k>=2} (i_k - 1) * prod_{m<k} I_m of the vector.
Public functions take and return 0-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .history import CONSUMER, PRODUCER, READER, WRITER, History, MethodKind

AXES = ("I", "O", "P", "M")
KIND_ORDER = (PRODUCER, CONSUMER, READER, WRITER)


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class TensorShape:
    dI: int
    dO: int
    dP: int
    dM: int

    def __post_init__(self) -> None:
        if min(self.dims) < 1:
            raise ShapeError(f"all dimensions must be positive, got {self.dims}")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.dI, self.dO, self.dP, self.dM)

    @property
    def size(self) -> int:
        return self.dI * self.dO * self.dP * self.dM

    @classmethod
    def parse(cls, text: str) -> "TensorShape":
        parts = text.split(",")
        if len(parts) != 4:
            raise ShapeError(f"expected four comma-separated dimensions I,O,P,M, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise ShapeError(f"dimensions must be integers, got {text!r}") from None


@dataclass(frozen=True)
class HistoryTensor:
    shape: TensorShape
    data: np.ndarray

    def entry(self, i: int, o: int, p: int, m: int) -> float:
        return float(self.data[i, o, p, m])


@dataclass(frozen=True)
class Axes:
    """Labels of each tensor axis, in index order."""

    items: tuple
    objects: tuple
    processes: tuple
    methods: tuple[MethodKind, ...]

    @property
    def shape(self) -> TensorShape:
        return TensorShape(len(self.items), len(self.objects), len(self.processes), len(self.methods))


def mu_index(index: Sequence[int], dims: Sequence[int]) -> int:
    """1-based vector position of the 1-based tensor index (the segmentation bijection)."""
    j = index[0]
    stride = 1
    for k in range(1, len(dims)):
        stride *= dims[k - 1]
        j += (index[k] - 1) * stride
    return j


def fold(vector, shape: TensorShape) -> HistoryTensor:
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1 or v.size != shape.size:
        raise ShapeError(f"vector of length {v.size} cannot fold into {shape.dims}")
    return HistoryTensor(shape, v.reshape(shape.dims, order="F"))


def unfold(tensor: HistoryTensor) -> np.ndarray:
    return tensor.data.reshape(-1, order="F")


def sum_over(tensor, dims: Iterable[str]) -> np.ndarray:
    """Sum out the named trailing axes ("P" and/or "M").

    Accepts a :class:`HistoryTensor` (axes I, O, P, M) or the order-3 array left
    after summing out one of P and M, whose last axis is then the other one.
    """
    names = set(dims)
    if not names:
        raise ValueError("dims must be non-empty")
    if not names <= {"P", "M"}:
        raise ValueError(f"only P and M can be summed out, got {sorted(names)}")
    data = tensor.data if isinstance(tensor, HistoryTensor) else np.asarray(tensor)
    if data.ndim == 4:
        return data.sum(axis=tuple(AXES.index(n) for n in names))
    if data.ndim == 3 and len(names) == 1:
        return data.sum(axis=2)
    raise ValueError(f"cannot sum {sorted(names)} out of an order-{data.ndim} array")


def is_quantifiable_matrix(matrix) -> bool:
    return bool(np.all(np.asarray(matrix) >= 0))


def heatmap(tensor: HistoryTensor) -> np.ndarray:
    return np.abs(tensor.data).sum(axis=(2, 3))


def _item_key(item):
    return (item is None, 0 if item is None else item)


def history_axes(history: History) -> Axes:
    items = set()
    objects = set()
    processes = set()
    kinds = set()
    for call in history.calls:
        if call.response_ns is None:
            continue
        for _, item in call.configurations():
            items.add(item)
        objects.add(call.object)
        processes.add(call.thread)
        kinds.add(call.kind)
    return Axes(
        tuple(sorted(items, key=_item_key)),
        tuple(sorted(objects)),
        tuple(sorted(processes)),
        tuple(k for k in KIND_ORDER if k in kinds),
    )


def vectorize(history: History, axes: Optional[Axes] = None) -> tuple[np.ndarray, Axes]:
    """Flat M x P x O x I history vector (item index fastest) of the completed calls.

    Producers add +1 and consumers -1 at their item; a writer adds +1 at its new
    value and -1 at the overwritten one (nothing when they coincide); the k-th
    read of a configuration adds -(1/2)^k.
    """
    if axes is None:
        axes = history_axes(history)
    shape = axes.shape
    ii = {v: n for n, v in enumerate(axes.items)}
    oi = {v: n for n, v in enumerate(axes.objects)}
    pi = {v: n for n, v in enumerate(axes.processes)}
    mi = {v: n for n, v in enumerate(axes.methods)}
    dI, dO, dP = shape.dI, shape.dO, shape.dP
    vec = np.zeros(shape.size)
    reads: dict = {}

    def pos(call, item) -> int:
        return ii[item] + dI * (oi[call.object] + dO * (pi[call.thread] + dP * mi[call.kind]))

    for call in history.calls:
        if call.response_ns is None:
            continue
        if call.kind is PRODUCER:
            vec[pos(call, call.item_in)] += 1
        elif call.kind is CONSUMER:
            vec[pos(call, call.item_out)] -= 1
        elif call.kind is WRITER:
            if call.item_in != call.prev:
                vec[pos(call, call.item_in)] += 1
                vec[pos(call, call.prev)] -= 1
        else:
            key = (call.object, call.item_out)
            reads[key] = reads.get(key, 0) + 1
            vec[pos(call, call.item_out)] -= 0.5 ** reads[key]
    return vec, axes


def history_tensor(history: History, shape: Optional[TensorShape] = None) -> tuple[HistoryTensor, Axes]:
    vec, axes = vectorize(history)
    if shape is not None and shape != axes.shape:
        raise ShapeError(f"history has dimensions {axes.shape.dims} (I,O,P,M), not {shape.dims}")
    return fold(vec, axes.shape), axes
