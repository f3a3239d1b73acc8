"""Comparison methods: the same learner without masks, and 1-NN under dependent DTW."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import _kernels
from .dataset import Instance, TimeSeriesDataset
from .model import ShapeletModel
from .trainer import MetricsLog, TrainConfig, train


def train_unmasked(cfg: TrainConfig, ds: TimeSeriesDataset, **kwargs) -> tuple[ShapeletModel, MetricsLog]:
    """Train with every activated mask frozen at 1 (masks are initialized but never used)."""
    return train(replace(cfg, masked=False), ds, **kwargs)


def dtw_distance(a: Instance | np.ndarray, b: Instance | np.ndarray) -> float:
    """Unconstrained DTW with one warping path shared by all channels.

    The cell cost is the squared Euclidean distance between the two
    multivariate samples; the result is the accumulated cost of the best path.
    """
    x = np.ascontiguousarray(getattr(a, "channels", a), dtype=np.float64)
    y = np.ascontiguousarray(getattr(b, "channels", b), dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"channel count mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(_kernels.dtw(x, y))


def nn_dtw_classify(train: TimeSeriesDataset, query: Instance) -> int:
    """Label (1..C, in ``train``'s label order) of the DTW-nearest training instance."""
    if len(train) == 0:
        raise ValueError("empty training set")
    best, label = np.inf, train.instances[0].label
    for inst in train.instances:
        d = dtw_distance(inst, query)
        if d < best:
            best, label = d, inst.label
    return label


class NearestNeighborDTW:
    """Adapter giving 1-NN DTW the ``class_labels``/``predict`` surface used by evaluation."""

    def __init__(self, train: TimeSeriesDataset):
        self.train = train
        self.class_labels = train.class_labels

    def predict(self, instance: Instance) -> int:
        return nn_dtw_classify(self.train, instance)
