"""Multivariate time-series datasets: JSON-lines I/O, one-hot targets, folds."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Raised for malformed dataset files or invariant violations."""


@dataclass(frozen=True, eq=False)
class Instance:
    """One labeled series; ``channels`` has shape (V, Q) and ``label`` is in 1..C."""

    id: str
    label: int
    channels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.channels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise DatasetError(f"instance {self.id!r}: channels must be a non-empty V x Q array")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def length(self) -> int:
        return self.channels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.id == other.id and self.label == other.label
                and np.array_equal(self.channels, other.channels))


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    instances: tuple[Instance, ...]
    num_channels: int
    num_classes: int
    # original label values; internal label c corresponds to class_labels[c - 1]
    class_labels: tuple[Any, ...]
    _packed: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if len(self.class_labels) != self.num_classes:
            raise DatasetError("class_labels must list exactly num_classes values")
        if len(set(self.class_labels)) != self.num_classes:
            raise DatasetError("class_labels must be distinct")
        for inst in self.instances:
            if inst.num_channels != self.num_channels:
                raise DatasetError(
                    f"instance {inst.id!r} has {inst.num_channels} channels, expected {self.num_channels}")
            if not 1 <= inst.label <= self.num_classes:
                raise DatasetError(f"instance {inst.id!r} has label {inst.label} outside 1..{self.num_classes}")

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, Any, Any]],
                     class_labels: Sequence[Any] | None = None) -> "TimeSeriesDataset":
        """Build from ``(id, original_label, channels)`` triples.

        Without ``class_labels`` the label map is built in first-appearance
        order; with it, every label must already be listed.
        """
        records = list(records)
        if not records:
            raise DatasetError("dataset is empty")
        mapping: dict[Any, int] = {}
        if class_labels is not None:
            mapping = {lab: c + 1 for c, lab in enumerate(class_labels)}
        instances = []
        for rid, lab, channels in records:
            if lab not in mapping:
                if class_labels is not None:
                    raise DatasetError(f"instance {rid!r}: label {lab!r} not in the known label set")
                mapping[lab] = len(mapping) + 1
            instances.append(Instance(str(rid), mapping[lab], channels))
        labels = tuple(mapping)
        return cls(tuple(instances), instances[0].num_channels, len(labels), labels)

    def __len__(self):
        return len(self.instances)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesDataset):
            return NotImplemented
        return (self.num_channels == other.num_channels and self.num_classes == other.num_classes
                and self.class_labels == other.class_labels and self.instances == other.instances)

    @property
    def labels(self) -> np.ndarray:
        return np.array([inst.label for inst in self.instances], dtype=np.int64)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([inst.length for inst in self.instances], dtype=np.int64)

    def original_label(self, label: int) -> Any:
        return self.class_labels[label - 1]

    def subset(self, indices: Sequence[int]) -> "TimeSeriesDataset":
        return TimeSeriesDataset(tuple(self.instances[i] for i in indices), self.num_channels,
                                 self.num_classes, self.class_labels)

    def relabel(self, class_labels: Sequence[Any]) -> "TimeSeriesDataset":
        """Re-express internal labels against another label ordering (e.g. a model's)."""
        class_labels = tuple(class_labels)
        if class_labels == self.class_labels:
            return self
        return TimeSeriesDataset.from_records(
            ((inst.id, self.original_label(inst.label), inst.channels) for inst in self.instances),
            class_labels=class_labels)

    def pack(self):
        """Flat channel-major buffer plus offsets, lengths and 0-based labels for the kernels."""
        if self._packed is None:
            lengths = self.lengths
            sizes = lengths * self.num_channels
            offsets = np.zeros(len(self), dtype=np.int64)
            np.cumsum(sizes[:-1], out=offsets[1:])
            flat = np.concatenate([inst.channels.ravel() for inst in self.instances])
            object.__setattr__(self, "_packed", (flat, offsets, lengths, self.labels - 1))
        return self._packed


def load_dataset(path, class_labels: Sequence[Any] | None = None) -> TimeSeriesDataset:
    path = Path(path)
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or not {"id", "label", "channels"} <= obj.keys():
                raise DatasetError(f"{path}:{lineno}: expected an object with id, label, channels")
            rid, lab, channels = obj["id"], obj["label"], obj["channels"]
            if not isinstance(lab, (str, int)) or isinstance(lab, bool):
                raise DatasetError(f"{path}:{lineno}: label must be a string or integer")
            if not isinstance(channels, list) or not channels or not all(isinstance(c, list) for c in channels):
                raise DatasetError(f"{path}:{lineno}: channels must be a non-empty array of arrays")
            lens = {len(c) for c in channels}
            if len(lens) != 1:
                raise DatasetError(f"{path}:{lineno}: instance {rid!r} has ragged channels "
                                   f"(lengths {sorted(lens)})")
            if lens == {0}:
                raise DatasetError(f"{path}:{lineno}: instance {rid!r} has empty channels")
            arr = np.array(channels)
            # null, strings or nested lists show up as a non-numeric dtype
            if arr.dtype.kind not in "iuf" or arr.ndim != 2:
                raise DatasetError(f"{path}:{lineno}: non-numeric channel values")
            arr = arr.astype(np.float64)
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"{path}:{lineno}: non-finite channel values")
            if records and arr.shape[0] != records[0][2].shape[0]:
                raise DatasetError(f"{path}:{lineno}: instance {rid!r} has {arr.shape[0]} channels, "
                                   f"expected {records[0][2].shape[0]}")
            records.append((str(rid), lab, arr))
    if not records:
        raise DatasetError(f"{path}: empty dataset file")
    return TimeSeriesDataset.from_records(records, class_labels)


def save_dataset(ds: TimeSeriesDataset, path) -> None:
    # float repr is the shortest string that round-trips
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in ds.instances:
            obj = {"id": inst.id, "label": ds.original_label(inst.label),
                   "channels": inst.channels.tolist()}
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")


def one_hot(ds: TimeSeriesDataset) -> np.ndarray:
    Y = np.zeros((len(ds), ds.num_classes))
    Y[np.arange(len(ds)), ds.labels - 1] = 1.0
    return Y


def znormalize_channels(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """Per-instance, per-channel z-normalization; constant channels become zeros."""
    out = []
    for inst in ds.instances:
        x = inst.channels
        mean = x.mean(axis=1, keepdims=True)
        sd = x.std(axis=1, keepdims=True)
        centered = x - mean
        safe = np.where(sd > 0, sd, 1.0)
        z = np.where(sd > 0, centered / safe, 0.0)
        out.append(Instance(inst.id, inst.label, z))
    return TimeSeriesDataset(tuple(out), ds.num_channels, ds.num_classes, ds.class_labels)


def stratified_kfold(ds: TimeSeriesDataset, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    n = len(ds)
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if folds > n:
        raise ValueError(f"cannot split {n} instances into {folds} folds")
    y = ds.labels
    counts = np.bincount(y, minlength=ds.num_classes + 1)[1:]
    present = counts[counts > 0]
    if present.min() < folds:
        log.warning("smallest class has %d members < %d folds; using unstratified folds",
                    present.min(), folds)
        splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    else:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(np.sort(tr), np.sort(va)) for tr, va in splitter.split(np.zeros(n), y)]

