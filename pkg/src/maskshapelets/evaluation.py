"""Error rates, cross-validated grid search and mask exports."""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dataset import TimeSeriesDataset, stratified_kfold
from .model import ShapeletModel, predict_dataset
from .trainer import MetricsLog, TrainConfig, train

log = logging.getLogger(__name__)


def predictions(classifier, ds: TimeSeriesDataset) -> np.ndarray:
    """Predicted original label values for every instance of ``ds``."""
    if isinstance(classifier, ShapeletModel):
        idx = predict_dataset(classifier, ds)
    else:
        idx = np.array([classifier.predict(inst) for inst in ds.instances], dtype=np.int64)
    labels = classifier.class_labels
    return np.array([labels[i - 1] for i in idx], dtype=object)


def error_rate(classifier, ds: TimeSeriesDataset) -> float:
    """Fraction of instances whose predicted label differs from the true one.

    Labels are compared by original value, so ``ds`` may use a different
    internal label order than the classifier (a label the classifier never
    saw is always an error).
    """
    if len(ds) == 0:
        return 0.0
    truth = np.array([ds.original_label(inst.label) for inst in ds.instances], dtype=object)
    return float(np.mean(predictions(classifier, ds) != truth))


def cell_seed(base_seed: int, K: int, lam: float, fold: int) -> int:
    lam_words = struct.unpack("<II", struct.pack("<d", float(lam)))
    ss = np.random.SeedSequence([base_seed, K, fold, *lam_words])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class GridRow:
    K: int
    lam: float
    fold: int
    val_error: float


@dataclass
class GridResult:
    best_cfg: TrainConfig
    rows: list[GridRow]

    def summary(self) -> list[tuple[int, float, float]]:
        """(K, lam, mean validation error) per cell, in grid order."""
        cells: dict[tuple[int, float], list[float]] = {}
        for r in self.rows:
            cells.setdefault((r.K, r.lam), []).append(r.val_error)
        return [(K, lam, float(np.mean(errs))) for (K, lam), errs in cells.items()]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["K", "lambda", "fold", "val_error"])
            for r in self.rows:
                w.writerow([r.K, repr(r.lam), r.fold, repr(r.val_error)])
            for K, lam, mean in self.summary():
                w.writerow([K, repr(lam), "mean", repr(mean)])


def grid_search(ds: TimeSeriesDataset, folds: int, K_grid: Sequence[int], lam_grid: Sequence[float],
                base_cfg: TrainConfig) -> GridResult:
    """Cross-validated search over (K, lam); ties go to smaller K, then smaller lam."""
    splits = stratified_kfold(ds, folds, base_cfg.seed)
    rows = []
    for K in K_grid:
        for lam in lam_grid:
            for f, (tr_idx, va_idx) in enumerate(splits):
                cfg = replace(base_cfg, K=int(K), lam=float(lam),
                              seed=cell_seed(base_cfg.seed, int(K), float(lam), f))
                model, _ = train(cfg, ds.subset(tr_idx))
                err = error_rate(model, ds.subset(va_idx))
                rows.append(GridRow(int(K), float(lam), f, err))
                log.info("K=%d lambda=%g fold=%d val_error=%.4f", K, lam, f, err)
    result = GridResult(base_cfg, rows)
    K_best, lam_best, _ = min(result.summary(), key=lambda cell: (cell[2], cell[0], cell[1]))
    result.best_cfg = replace(base_cfg, K=K_best, lam=lam_best)
    return result


def export_masks(model: ShapeletModel, path) -> None:
    """Activated masks as a headerless K x V CSV matrix."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in model.activated_masks():
            w.writerow([repr(float(x)) for x in row])


def export_mask_snapshots(metrics: MetricsLog, path) -> None:
    """Long-format snapshots: ``iter,shapelet,ch1..chV`` per shapelet per snapshot."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not metrics.mask_snapshots:
            w.writerow(["iter", "shapelet"])
            return
        V = metrics.mask_snapshots[0][1].shape[1]
        w.writerow(["iter", "shapelet"] + [f"ch{v + 1}" for v in range(V)])
        for it, masks in metrics.mask_snapshots:
            for k, row in enumerate(masks):
                w.writerow([it, k + 1] + [repr(float(x)) for x in row])
